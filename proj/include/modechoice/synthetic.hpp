#pragma once

// Synthetic travel-survey generator with known ground truth. Individual
// attributes and per-mode level-of-service draws feed the utility equation,
// and the chosen mode is sampled from the resulting choice probabilities,
// so estimation on generated data can be checked against the planted
// parameters.

#include <cstdint>
#include <random>

#include "modechoice/mnl.hpp"

namespace modechoice {

// Level-of-service draw parameters for one mode: travel time and cost are
// lognormal with the given mean and standard deviation. A zero mean pins the
// value to zero (walking and cycling cost nothing).
struct ModeLevelOfService {
  double tt_mean = 30;
  double tt_spread = 10;
  double tc_mean = 10;
  double tc_spread = 4;
};

inline std::array<ModeLevelOfService, kNumModes> default_level_of_service() {
  return {{
      {20, 7, 20, 6},    // metro
      {40, 12, 8, 3},    // bus
      {35, 10, 15, 5},   // shared ride
      {30, 10, 40, 12},  // auto
      {25, 8, 15, 5},    // two-wheeler
      {28, 9, 50, 15},   // car
      {25, 8, 0, 0},     // cycle
      {60, 20, 0, 0},    // walk
  }};
}

struct SyntheticConfig {
  std::size_t n_observations = 1000;
  MnlSpec spec = MnlSpec::default_spec();
  MnlParams true_params;  // must match spec.n_params()
  std::array<ModeLevelOfService, kNumModes> level_of_service =
      default_level_of_service();
  std::uint64_t rng_seed = 1;

  // Individual attribute distributions.
  double gender_prob = 0.5;       // P(female)
  double metro_avail_prob = 0.5;  // P(metro available at origin)
  double age_mean = 32, age_spread = 10;
  double income_mean = 7730, income_spread = 4000;
  double two_wheeler_rate = 0.8;  // Poisson rate, capped at 4
  double pop_density_mean = 19000, pop_density_spread = 8000;
  double emp_density_mean = 4000, emp_density_spread = 2500;

  // Emit trip_purpose / occupation context columns.
  bool with_segments = true;
  std::array<double, 3> trip_purpose_probs = {0.55, 0.25, 0.20};
  std::array<double, 3> occupation_probs = {0.50, 0.30, 0.20};
};

// Planted coefficients matching MnlSpec::default_spec(): negative time and
// cost sensitivity, mode-specific constants and socio-economic effects at
// survey-like magnitudes.
inline MnlParams default_true_params() {
  return {
      -0.083, -0.017,                                              // b_tt b_tc
      3.647, 3.418, 2.854, 3.412, 3.636, 1.967, 6.652,             // ASCs
      0.221, 0.331,                                                // veh
      -3.03e-5, -1.28e-5, -2.64e-5, -2.37e-5, -1.86e-5, -2.49e-5,  // inc
      -2.96e-5,
      -0.544, -1.435, -1.107, -1.963, 0.414,                       // gender
      -0.028, 0.031,                                               // age
      -8e-5, 2e-5, 1e-5, -3.5e-4,                                  // emp
  };
}

namespace detail {

// Lognormal parameterized by its own mean and standard deviation.
inline double draw_lognormal(std::mt19937_64& rng, double mean, double spread) {
  if (mean <= 0) return 0.0;
  if (spread <= 0) return mean;
  const double s2 = std::log(1.0 + (spread * spread) / (mean * mean));
  std::lognormal_distribution<double> dist(std::log(mean) - 0.5 * s2,
                                           std::sqrt(s2));
  return dist(rng);
}

inline int draw_category(std::mt19937_64& rng,
                         const std::array<double, 3>& probs) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(rng);
  if (x < probs[0]) return 0;
  if (x < probs[0] + probs[1]) return 1;
  return 2;
}

}  // namespace detail

inline Dataset generate_synthetic(const SyntheticConfig& cfg) {
  require(cfg.n_observations >= 1, Errc::EmptyDataset,
          "n_observations must be at least 1");
  require(static_cast<int>(cfg.true_params.size()) == cfg.spec.n_params(),
          Errc::DimensionMismatch,
          "true_params has " + std::to_string(cfg.true_params.size()) +
              " entries, spec expects " + std::to_string(cfg.spec.n_params()));
  cfg.spec.validate();

  std::mt19937_64 rng(derive_seed(cfg.rng_seed, "synthetic"));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> age_dist(cfg.age_mean, cfg.age_spread);
  std::poisson_distribution<int> veh_dist(cfg.two_wheeler_rate);

  Dataset d;
  d.observations.reserve(cfg.n_observations);
  for (std::size_t n = 0; n < cfg.n_observations; ++n) {
    ChoiceObservation o;
    o.id = static_cast<std::int64_t>(n + 1);
    o.age = std::clamp(age_dist(rng), 16.0, 75.0);
    o.gender = unit(rng) < cfg.gender_prob ? 1.0 : 0.0;
    o.hh_income =
        detail::draw_lognormal(rng, cfg.income_mean, cfg.income_spread);
    o.n_two_wheelers = std::min(veh_dist(rng), 4);
    o.metro_avail = unit(rng) < cfg.metro_avail_prob ? 1.0 : 0.0;
    o.pop_density = detail::draw_lognormal(rng, cfg.pop_density_mean,
                                           cfg.pop_density_spread);
    o.emp_density = detail::draw_lognormal(rng, cfg.emp_density_mean,
                                           cfg.emp_density_spread);
    for (int i = 0; i < kNumModes; ++i) {
      const auto& los = cfg.level_of_service[i];
      double tt = detail::draw_lognormal(rng, los.tt_mean, los.tt_spread);
      o.travel_time[i] = tt > 0 ? tt : 1.0;
      o.travel_cost[i] = detail::draw_lognormal(rng, los.tc_mean,
                                                los.tc_spread);
    }
    if (cfg.with_segments) {
      o.trip_purpose = detail::draw_category(rng, cfg.trip_purpose_probs);
      o.occupation = detail::draw_category(rng, cfg.occupation_probs);
    }

    // Label sampled from the choice probabilities at the planted parameters.
    const auto V = systematic_utilities(cfg.spec, cfg.true_params, o);
    const auto p = choice_probabilities(V);
    const double x = unit(rng);
    double cum = 0.0;
    int chosen = kNumModes - 1;
    for (int i = 0; i < kNumModes; ++i) {
      cum += p[i];
      if (x < cum) {
        chosen = i;
        break;
      }
    }
    o.chosen = ModeLabel::from_index(chosen);
    d.observations.push_back(std::move(o));
  }
  return d;
}

}  // namespace modechoice
