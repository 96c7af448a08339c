#pragma once

// Multinomial logit: utility specification, maximum-likelihood estimation
// with standard errors / t-statistics / likelihood-ratio fit indices, and
// probability prediction.
//
// Utility of alternative i for observation n:
//   V_i = ASC_i + b_tt*tt_i + b_tc*tc_i + sum of alternative-specific
//         socio-economic terms (vehicles, gender, age, income, densities)
// with every slot of the reference alternative pinned to 0 for
// identification. Choice probabilities are softmax over available
// alternatives.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "modechoice/data.hpp"

namespace modechoice {

enum class UtilityFeature : int {
  Asc = 0,
  Vehicles,
  Gender,
  Age,
  Income,
  PopDensity,
  EmpDensity,
};

inline constexpr std::array<const char*, 7> kUtilityFeatureTags = {
    "asc", "veh", "gender", "age", "inc", "pop", "emp"};

inline const char* utility_feature_tag(UtilityFeature f) {
  return kUtilityFeatureTags[static_cast<int>(f)];
}

inline UtilityFeature utility_feature_from_tag(std::string_view tag) {
  for (int i = 0; i < 7; ++i)
    if (tag == kUtilityFeatureTags[i]) return static_cast<UtilityFeature>(i);
  fail(Errc::ConfigError, "unknown utility feature '" + std::string(tag) + "'");
}

inline double utility_feature_value(UtilityFeature f,
                                    const ChoiceObservation& o) {
  switch (f) {
    case UtilityFeature::Asc: return 1.0;
    case UtilityFeature::Vehicles: return o.n_two_wheelers;
    case UtilityFeature::Gender: return o.gender;
    case UtilityFeature::Age: return o.age;
    case UtilityFeature::Income: return o.hh_income;
    case UtilityFeature::PopDensity: return o.pop_density;
    case UtilityFeature::EmpDensity: return o.emp_density;
  }
  return 0.0;
}

// One alternative-specific coefficient slot.
struct MnlTerm {
  UtilityFeature feature;
  ModeLabel alternative;
};

using MnlParams = std::vector<double>;

using AvailabilityMask = std::array<std::uint8_t, kNumModes>;

inline constexpr AvailabilityMask kAllAvailable = {1, 1, 1, 1, 1, 1, 1, 1};

struct MnlSpec {
  ModeLabel reference{1};
  bool use_travel_time = true;
  bool use_travel_cost = true;
  std::vector<MnlTerm> terms;

  // Optional per-observation choice-set restriction, indexed like the
  // dataset it is estimated on. Empty means every alternative is available.
  // Runtime-only: not part of the serialized spec layout.
  std::vector<AvailabilityMask> availability;

  int n_generic() const {
    return (use_travel_time ? 1 : 0) + (use_travel_cost ? 1 : 0);
  }
  int n_params() const { return n_generic() + static_cast<int>(terms.size()); }

  int tt_slot() const { return use_travel_time ? 0 : -1; }
  int tc_slot() const {
    return use_travel_cost ? (use_travel_time ? 1 : 0) : -1;
  }
  int term_slot(int t) const { return n_generic() + t; }

  std::vector<std::string> slot_names() const {
    std::vector<std::string> names;
    if (use_travel_time) names.push_back("b_tt");
    if (use_travel_cost) names.push_back("b_tc");
    for (const auto& t : terms)
      names.push_back(std::string(utility_feature_tag(t.feature)) + "_" +
                      t.alternative.tag());
    return names;
  }

  void validate() const {
    std::set<std::pair<int, int>> seen;
    for (const auto& t : terms) {
      require(t.alternative != reference, Errc::DimensionMismatch,
              "term targets the reference alternative (identification)");
      require(seen.insert({static_cast<int>(t.feature),
                           t.alternative.code()})
                  .second,
              Errc::DimensionMismatch, "duplicate coefficient slot");
    }
  }

  AvailabilityMask mask_for(std::size_t obs_index) const {
    if (availability.empty()) return kAllAvailable;
    return availability[obs_index];
  }

  // ASC-only specification.
  static MnlSpec constants_only(ModeLabel reference = ModeLabel(1)) {
    MnlSpec s;
    s.reference = reference;
    s.use_travel_time = false;
    s.use_travel_cost = false;
    for (int c = 1; c <= kNumModes; ++c)
      if (c != reference.code())
        s.terms.push_back({UtilityFeature::Asc, ModeLabel(c)});
    return s;
  }

  // Every socio-economic feature on every non-reference alternative.
  static MnlSpec full(ModeLabel reference = ModeLabel(1)) {
    MnlSpec s;
    s.reference = reference;
    for (UtilityFeature f :
         {UtilityFeature::Asc, UtilityFeature::Vehicles, UtilityFeature::Gender,
          UtilityFeature::Age, UtilityFeature::Income,
          UtilityFeature::PopDensity, UtilityFeature::EmpDensity})
      for (int c = 1; c <= kNumModes; ++c)
        if (c != reference.code()) s.terms.push_back({f, ModeLabel(c)});
    return s;
  }

  // Default production layout: ASCs and income on every non-reference
  // alternative, vehicle ownership on auto/two-wheeler, gender and age and
  // employment density only where mode-specific effects are retained.
  static MnlSpec default_spec() {
    MnlSpec s;
    s.reference = ModeLabel(1);  // metro
    auto add = [&](UtilityFeature f, std::initializer_list<int> codes) {
      for (int c : codes) s.terms.push_back({f, ModeLabel(c)});
    };
    add(UtilityFeature::Asc, {2, 3, 4, 5, 6, 7, 8});
    add(UtilityFeature::Vehicles, {4, 5});
    add(UtilityFeature::Income, {2, 3, 4, 5, 6, 7, 8});
    add(UtilityFeature::Gender, {3, 5, 6, 7, 8});
    add(UtilityFeature::Age, {3, 6});
    add(UtilityFeature::EmpDensity, {2, 4, 5, 7});
    return s;
  }
};

struct MnlEstimate {
  MnlParams params;
  std::vector<double> std_errors;  // NaN when unavailable
  std::vector<double> t_stats;
  double ll_final = 0;
  double ll_constants_only = 0;
  double rho2 = 0;
  double adj_rho2 = 0;
  std::size_t n_obs = 0;
  bool converged = false;
  std::size_t iterations = 0;
  bool std_errors_available = false;
  bool quasi_separation = false;
};

// ---------------------------------------------------------------------------
// Utilities and probabilities

inline std::array<double, kNumModes> systematic_utilities(
    const MnlSpec& spec, const MnlParams& params, const ChoiceObservation& o,
    const AvailabilityMask& mask = kAllAvailable) {
  require(static_cast<int>(params.size()) == spec.n_params(),
          Errc::DimensionMismatch,
          "params has " + std::to_string(params.size()) + " entries, spec has " +
              std::to_string(spec.n_params()) + " slots");
  std::array<double, kNumModes> V{};
  if (spec.use_travel_time) {
    const double b = params[spec.tt_slot()];
    for (int i = 0; i < kNumModes; ++i) V[i] += b * o.travel_time[i];
  }
  if (spec.use_travel_cost) {
    const double b = params[spec.tc_slot()];
    for (int i = 0; i < kNumModes; ++i) V[i] += b * o.travel_cost[i];
  }
  for (std::size_t t = 0; t < spec.terms.size(); ++t) {
    const auto& term = spec.terms[t];
    V[term.alternative.index()] +=
        params[spec.term_slot(static_cast<int>(t))] *
        utility_feature_value(term.feature, o);
  }
  for (int i = 0; i < kNumModes; ++i)
    if (!mask[i]) V[i] = -std::numeric_limits<double>::infinity();
  return V;
}

// Softmax with max-subtraction; -inf entries receive probability 0.
inline std::array<double, kNumModes> choice_probabilities(
    const std::array<double, kNumModes>& V) {
  double vmax = -std::numeric_limits<double>::infinity();
  for (double v : V) vmax = std::max(vmax, v);
  require(std::isfinite(vmax), Errc::AllUnavailable,
          "no available alternative has finite utility");
  std::array<double, kNumModes> p{};
  double z = 0.0;
  for (int i = 0; i < kNumModes; ++i) {
    p[i] = std::isfinite(V[i]) ? std::exp(V[i] - vmax) : 0.0;
    z += p[i];
  }
  for (double& x : p) x /= z;
  return p;
}

// ---------------------------------------------------------------------------
// Likelihood machinery

namespace detail {

// Sparse design row: nonzero (slot, value) pairs of dV_i/dtheta for one
// (observation, alternative) pair. Precomputed once per estimation since it
// does not depend on the parameters.
struct DesignEntry {
  int slot;
  double value;
};

struct ObsDesign {
  std::array<std::vector<DesignEntry>, kNumModes> rows;
  AvailabilityMask mask;
  int chosen;
};

struct Design {
  std::vector<ObsDesign> obs;
  // Per-slot feature scale. Estimation runs on x/s so every design value is
  // O(1); coefficients and standard errors are mapped back to natural units
  // afterwards. All ones when scaling is off.
  std::vector<double> slot_scale;
};

inline std::vector<ObsDesign> build_design_rows(const MnlSpec& spec,
                                                const Dataset& d) {
  if (!spec.availability.empty())
    require(spec.availability.size() == d.n(), Errc::DimensionMismatch,
            "availability mask count does not match dataset size");
  // Terms grouped per alternative, preserving slot order.
  std::array<std::vector<std::pair<int, UtilityFeature>>, kNumModes> per_alt;
  for (std::size_t t = 0; t < spec.terms.size(); ++t)
    per_alt[spec.terms[t].alternative.index()].push_back(
        {spec.term_slot(static_cast<int>(t)), spec.terms[t].feature});

  std::vector<ObsDesign> design(d.n());
  for (std::size_t nidx = 0; nidx < d.n(); ++nidx) {
    const auto& o = d[nidx];
    auto& od = design[nidx];
    od.mask = spec.mask_for(nidx);
    od.chosen = o.chosen.index();
    for (int i = 0; i < kNumModes; ++i) {
      if (!od.mask[i]) continue;
      auto& row = od.rows[i];
      if (spec.use_travel_time)
        row.push_back({spec.tt_slot(), o.travel_time[i]});
      if (spec.use_travel_cost)
        row.push_back({spec.tc_slot(), o.travel_cost[i]});
      for (const auto& [slot, feature] : per_alt[i])
        row.push_back({slot, utility_feature_value(feature, o)});
    }
  }
  return design;
}

inline Design build_design(const MnlSpec& spec, const Dataset& d,
                           bool unit_scale) {
  Design design;
  design.obs = build_design_rows(spec, d);
  design.slot_scale.assign(spec.n_params(), 1.0);
  if (!unit_scale) return design;
  for (const auto& od : design.obs)
    for (const auto& row : od.rows)
      for (const auto& e : row)
        design.slot_scale[e.slot] =
            std::max(design.slot_scale[e.slot], std::abs(e.value));
  for (auto& od : design.obs)
    for (auto& row : od.rows)
      for (auto& e : row) e.value /= design.slot_scale[e.slot];
  return design;
}

inline std::array<double, kNumModes> design_utilities(
    const ObsDesign& od, const MnlParams& params) {
  std::array<double, kNumModes> V{};
  for (int i = 0; i < kNumModes; ++i) {
    if (!od.mask[i]) {
      V[i] = -std::numeric_limits<double>::infinity();
      continue;
    }
    double v = 0.0;
    for (const auto& e : od.rows[i]) v += params[e.slot] * e.value;
    V[i] = v;
  }
  return V;
}

// Per-observation log P(chosen) and the probability vector.
inline double obs_loglik(const ObsDesign& od, const MnlParams& params,
                         std::array<double, kNumModes>* probs_out = nullptr) {
  const auto V = design_utilities(od, params);
  double vmax = -std::numeric_limits<double>::infinity();
  bool any_nan = false;
  for (double v : V) {
    if (std::isnan(v)) any_nan = true;
    vmax = std::max(vmax, v);
  }
  if (any_nan || vmax == std::numeric_limits<double>::infinity())
    return std::numeric_limits<double>::quiet_NaN();  // divergent params
  if (!std::isfinite(vmax))
    fail(Errc::AllUnavailable, "observation has an empty choice set");
  double z = 0.0;
  std::array<double, kNumModes> e{};
  for (int i = 0; i < kNumModes; ++i) {
    e[i] = std::isfinite(V[i]) ? std::exp(V[i] - vmax) : 0.0;
    z += e[i];
  }
  if (probs_out)
    for (int i = 0; i < kNumModes; ++i) (*probs_out)[i] = e[i] / z;
  return (V[od.chosen] - vmax) - std::log(z);
}

inline double total_loglik(const std::vector<ObsDesign>& design,
                           const MnlParams& params) {
  std::vector<double> per_obs(design.size());
  for (std::size_t n = 0; n < design.size(); ++n)
    per_obs[n] = obs_loglik(design[n], params);
  return pairwise_sum(design.size(), [&](std::size_t i) { return per_obs[i]; });
}

struct LikelihoodEval {
  double ll = 0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

// LL, analytic gradient and analytic Hessian in one pass.
//   grad   = sum_n ( x_chosen - sum_i P_i x_i )
//   hess   = sum_n ( xbar xbar^T - sum_i P_i x_i x_i^T )
inline LikelihoodEval eval_likelihood(const std::vector<ObsDesign>& design,
                                      const MnlParams& params,
                                      bool with_hessian) {
  const int K = static_cast<int>(params.size());
  LikelihoodEval ev;
  ev.grad = Eigen::VectorXd::Zero(K);
  if (with_hessian) ev.hess = Eigen::MatrixXd::Zero(K, K);

  std::vector<double> per_obs_ll(design.size());
  Eigen::VectorXd xbar(K);
  for (std::size_t n = 0; n < design.size(); ++n) {
    const auto& od = design[n];
    std::array<double, kNumModes> P{};
    per_obs_ll[n] = obs_loglik(od, params, &P);

    xbar.setZero();
    for (int i = 0; i < kNumModes; ++i) {
      if (!od.mask[i] || P[i] == 0.0) continue;
      for (const auto& e : od.rows[i]) xbar[e.slot] += P[i] * e.value;
      if (with_hessian) {
        const auto& row = od.rows[i];
        for (std::size_t a = 0; a < row.size(); ++a) {
          const double pa = P[i] * row[a].value;
          for (std::size_t b = 0; b < row.size(); ++b)
            ev.hess(row[a].slot, row[b].slot) -= pa * row[b].value;
        }
      }
    }
    for (const auto& e : od.rows[od.chosen]) ev.grad[e.slot] += e.value;
    ev.grad -= xbar;
    if (with_hessian) ev.hess += xbar * xbar.transpose();
  }
  ev.ll = pairwise_sum(design.size(),
                       [&](std::size_t i) { return per_obs_ll[i]; });
  if (!std::isfinite(ev.ll))
    fail(Errc::NonFiniteLikelihood, "log-likelihood is not finite");
  return ev;
}

}  // namespace detail

inline std::pair<double, std::vector<double>> log_likelihood_and_gradient(
    const MnlSpec& spec, const MnlParams& params, const Dataset& d) {
  require(!d.empty(), Errc::EmptyDataset, "likelihood of empty dataset");
  require(static_cast<int>(params.size()) == spec.n_params(),
          Errc::DimensionMismatch, "parameter/slot count mismatch");
  const auto design = detail::build_design_rows(spec, d);
  auto ev = detail::eval_likelihood(design, params, /*with_hessian=*/false);
  return {ev.ll,
          std::vector<double>(ev.grad.data(), ev.grad.data() + ev.grad.size())};
}

// Constants-only log-likelihood in closed form from class shares.
inline double constants_only_loglik(const Dataset& d) {
  const auto counts = d.class_counts();
  const double n = static_cast<double>(d.n());
  double ll = 0.0;
  for (int c = 0; c < kNumModes; ++c)
    if (counts[c] > 0)
      ll += static_cast<double>(counts[c]) *
            std::log(static_cast<double>(counts[c]) / n);
  return ll;
}

struct EstimateOptions {
  std::size_t max_iter = 200;
  double grad_tol = 1e-6;
};

// Damped Newton-Raphson on the exact Hessian with step-halving, falling back
// to steepest ascent when the Newton direction is unusable. The MNL
// log-likelihood is globally concave, so this converges from the all-zero
// start. Standard errors come from the inverse negative Hessian at the
// optimum.
inline MnlEstimate estimate_mnl(const MnlSpec& spec, const Dataset& d,
                                const EstimateOptions& opts = {}) {
  require(!d.empty(), Errc::EmptyDataset, "estimate_mnl on empty dataset");
  spec.validate();
  const int K = spec.n_params();
  require(K > 0, Errc::DimensionMismatch, "spec has no free parameters");

  MnlEstimate est;
  est.n_obs = d.n();
  est.ll_constants_only = constants_only_loglik(d);

  // Quasi-separation pre-check: a class with a free ASC that never occurs in
  // the data drives that ASC to -infinity.
  {
    const auto counts = d.class_counts();
    for (const auto& t : spec.terms)
      if (t.feature == UtilityFeature::Asc &&
          counts[t.alternative.index()] == 0)
        est.quasi_separation = true;
  }

  // Estimation runs on unit-scaled design values (see Design::slot_scale);
  // the gradient tolerance therefore behaves uniformly across slots whose
  // natural units differ by orders of magnitude.
  const auto design = detail::build_design(spec, d, /*unit_scale=*/true);
  MnlParams theta(K, 0.0);  // scaled-space parameters
  auto ev = detail::eval_likelihood(design.obs, theta, /*with_hessian=*/true);

  const auto grad_inf_norm = [](const Eigen::VectorXd& g) {
    return g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
  };

  bool converged = grad_inf_norm(ev.grad) <= opts.grad_tol;
  std::size_t iter = 0;
  while (!converged && iter < opts.max_iter) {
    // Newton direction: solve (-H) dir = grad. -H is PSD by concavity.
    Eigen::VectorXd dir;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(-ev.hess);
    if (ldlt.info() == Eigen::Success) dir = ldlt.solve(ev.grad);
    const bool newton_ok = dir.size() == K && dir.allFinite() &&
                           ev.grad.dot(dir) > 0;
    if (!newton_ok) dir = ev.grad;  // steepest ascent fallback

    double step = 1.0;
    bool improved = false;
    MnlParams candidate(K);
    while (step >= 1e-14) {
      for (int j = 0; j < K; ++j) candidate[j] = theta[j] + step * dir[j];
      double ll_new;
      try {
        ll_new = detail::total_loglik(design.obs, candidate);
      } catch (const Error&) {
        ll_new = -std::numeric_limits<double>::infinity();
      }
      if (std::isfinite(ll_new) && ll_new > ev.ll) {
        theta = candidate;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    ++iter;
    if (!improved) {
      // Near the optimum the likelihood is flat to double precision while
      // the gradient can still contract. Accept the full Newton step iff it
      // shrinks the gradient without losing likelihood beyond rounding.
      for (int j = 0; j < K; ++j) candidate[j] = theta[j] + dir[j];
      detail::LikelihoodEval probe;
      bool ok = true;
      try {
        probe = detail::eval_likelihood(design.obs, candidate,
                                        /*with_hessian=*/true);
      } catch (const Error&) {
        ok = false;
      }
      const double slack = 1e-12 * (1.0 + std::abs(ev.ll));
      if (ok && std::isfinite(probe.ll) && probe.ll >= ev.ll - slack &&
          grad_inf_norm(probe.grad) < grad_inf_norm(ev.grad)) {
        theta = candidate;
        ev = std::move(probe);
        converged = grad_inf_norm(ev.grad) <= opts.grad_tol;
        continue;
      }
      break;  // stalled at the floating-point noise floor
    }

    ev = detail::eval_likelihood(design.obs, theta, /*with_hessian=*/true);
    for (int j = 0; j < K; ++j)
      if (std::abs(theta[j] / design.slot_scale[j]) > 50.0)
        est.quasi_separation = true;
    converged = grad_inf_norm(ev.grad) <= opts.grad_tol;
  }

  est.params.resize(K);
  for (int j = 0; j < K; ++j) est.params[j] = theta[j] / design.slot_scale[j];
  est.ll_final = ev.ll;
  est.converged = converged;
  est.iterations = iter;

  // rho^2 fit indices against the constants-only benchmark.
  if (est.ll_constants_only != 0.0) {
    est.rho2 = 1.0 - est.ll_final / est.ll_constants_only;
    est.adj_rho2 =
        1.0 - (est.ll_final - static_cast<double>(K)) / est.ll_constants_only;
  }

  // Covariance = inverse of the negative Hessian at the optimum, mapped back
  // to natural units (t statistics are scale invariant).
  est.std_errors.assign(K, std::numeric_limits<double>::quiet_NaN());
  est.t_stats.assign(K, std::numeric_limits<double>::quiet_NaN());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(-ev.hess);
  if (ldlt.info() == Eigen::Success) {
    Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(K, K));
    bool ok = cov.allFinite();
    for (int j = 0; ok && j < K; ++j) ok = cov(j, j) > 0;
    if (ok) {
      est.std_errors_available = true;
      for (int j = 0; j < K; ++j) {
        est.std_errors[j] = std::sqrt(cov(j, j)) / design.slot_scale[j];
        est.t_stats[j] = est.params[j] / est.std_errors[j];
      }
    }
  }
  return est;
}

// Analytic Hessian, exposed for gradient/Hessian consistency checks.
inline std::vector<std::vector<double>> mnl_hessian(const MnlSpec& spec,
                                                    const MnlParams& params,
                                                    const Dataset& d) {
  const auto design = detail::build_design_rows(spec, d);
  auto ev = detail::eval_likelihood(design, params, /*with_hessian=*/true);
  const int K = spec.n_params();
  std::vector<std::vector<double>> h(K, std::vector<double>(K));
  for (int a = 0; a < K; ++a)
    for (int b = 0; b < K; ++b) h[a][b] = ev.hess(a, b);
  return h;
}

struct MnlPrediction {
  NumMatrix probabilities;  // n x 8
  std::vector<int> labels;  // argmax codes, lowest code on ties
};

inline MnlPrediction predict_mnl(const MnlSpec& spec, const MnlParams& params,
                                 const Dataset& d) {
  require(static_cast<int>(params.size()) == spec.n_params(),
          Errc::DimensionMismatch, "parameter/slot count mismatch");
  if (!spec.availability.empty())
    require(spec.availability.size() == d.n(), Errc::DimensionMismatch,
            "availability mask count does not match dataset size");
  MnlPrediction out;
  out.probabilities = NumMatrix(d.n(), kNumModes);
  out.labels.resize(d.n());
  for (std::size_t n = 0; n < d.n(); ++n) {
    const auto V = systematic_utilities(spec, params, d[n], spec.mask_for(n));
    const auto p = choice_probabilities(V);
    int best = 0;
    for (int i = 0; i < kNumModes; ++i) {
      out.probabilities(n, i) = p[i];
      if (p[i] > p[best]) best = i;
    }
    out.labels[n] = best + 1;
  }
  return out;
}

}  // namespace modechoice
