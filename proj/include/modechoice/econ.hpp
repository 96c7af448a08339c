#pragma once

// Econometric post-analysis of a fitted logit model: value of time, point
// elasticities, logsum consumer surplus with segment aggregation, and
// declarative policy scenarios applied to datasets.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "modechoice/mnl.hpp"

namespace modechoice {

// ---------------------------------------------------------------------------
// Policy scenarios: ordered feature perturbations. Multiplicative rules are
// applied first, then absolute-set rules in declaration order (set-to-feature
// reads the value after the multiplicative phase).

struct ScenarioRule {
  enum class Op { Mul, Set, SetToFeature };
  std::string selector;
  Op op = Op::Mul;
  double value = 1.0;        // Mul factor or Set value
  std::string feature;       // SetToFeature source column
};

struct Scenario {
  std::string name;
  std::vector<ScenarioRule> rules;
};

inline void validate_scenario(const Scenario& s) {
  for (const auto& r : s.rules) {
    require(feature_index(r.selector) >= 0, Errc::UnknownSelector, r.selector);
    if (r.op == ScenarioRule::Op::Mul)
      require(std::isfinite(r.value) && r.value > 0, Errc::ConfigError,
              "multiplicative factor for " + r.selector + " must be positive");
    if (r.op == ScenarioRule::Op::Set)
      require(std::isfinite(r.value), Errc::ConfigError,
              "set value for " + r.selector + " must be finite");
    if (r.op == ScenarioRule::Op::SetToFeature)
      require(feature_index(r.feature) >= 0, Errc::UnknownSelector, r.feature);
  }
}

inline ChoiceObservation apply_scenario_to_obs(const ChoiceObservation& o,
                                               const Scenario& s) {
  ChoiceObservation out = o;
  for (const auto& r : s.rules)
    if (r.op == ScenarioRule::Op::Mul) {
      const int f = feature_index(r.selector);
      set_feature(out, f, get_feature(out, f) * r.value);
    }
  for (const auto& r : s.rules) {
    if (r.op == ScenarioRule::Op::Set)
      set_feature(out, feature_index(r.selector), r.value);
    else if (r.op == ScenarioRule::Op::SetToFeature)
      set_feature(out, feature_index(r.selector),
                  get_feature(out, feature_index(r.feature)));
  }
  return out;
}

// Pure: the input dataset is never modified.
inline Dataset apply_policy_scenario(const Dataset& d, const Scenario& s) {
  validate_scenario(s);
  Dataset out = d;
  for (auto& o : out.observations) o = apply_scenario_to_obs(o, s);
  return out;
}

// The five named presets used by the scenario reports: system-wide cost
// rises, an income rise, and system-wide time savings.
inline const std::vector<std::string>& scenario_preset_names() {
  static const std::vector<std::string> names = {
      "cost_up_10", "cost_up_20", "income_up_10", "time_down_10",
      "time_down_20"};
  return names;
}

inline Scenario scenario_preset(std::string_view name) {
  auto all_los = [](const char* prefix, double factor) {
    std::vector<ScenarioRule> rules;
    for (const char* tag : kModeTags)
      rules.push_back({std::string(prefix) + tag, ScenarioRule::Op::Mul,
                       factor, {}});
    return rules;
  };
  Scenario s;
  s.name = std::string(name);
  if (name == "cost_up_10") s.rules = all_los("tc_", 1.10);
  else if (name == "cost_up_20") s.rules = all_los("tc_", 1.20);
  else if (name == "income_up_10")
    s.rules = {{"hh_income", ScenarioRule::Op::Mul, 1.10, {}}};
  else if (name == "time_down_10") s.rules = all_los("tt_", 0.90);
  else if (name == "time_down_20") s.rules = all_los("tt_", 0.80);
  else
    fail(Errc::ConfigError, "unknown scenario preset '" + s.name + "'");
  return s;
}

// ---------------------------------------------------------------------------
// Population segments

struct SegmentSpec {
  enum class Dimension { Gender, IncomeBand, TripPurpose, Occupation };
  Dimension dimension = Dimension::Gender;
  std::vector<double> band_edges = {5000.0, 15000.0};  // income bands only

  std::size_t count() const {
    switch (dimension) {
      case Dimension::Gender: return 2;
      case Dimension::IncomeBand: return band_edges.size() + 1;
      case Dimension::TripPurpose: return 3;
      case Dimension::Occupation: return 3;
    }
    return 0;
  }

  static SegmentSpec from_name(std::string_view name) {
    SegmentSpec s;
    if (name == "gender") s.dimension = Dimension::Gender;
    else if (name == "income") s.dimension = Dimension::IncomeBand;
    else if (name == "trip_purpose") s.dimension = Dimension::TripPurpose;
    else if (name == "occupation") s.dimension = Dimension::Occupation;
    else
      fail(Errc::ConfigError,
           "unknown segment dimension '" + std::string(name) + "'");
    return s;
  }
};

// Segment index of an observation, or nullopt when the required context
// column is absent.
inline std::optional<std::size_t> segment_of(const SegmentSpec& seg,
                                             const ChoiceObservation& o) {
  switch (seg.dimension) {
    case SegmentSpec::Dimension::Gender:
      return o.gender >= 0.5 ? 1u : 0u;
    case SegmentSpec::Dimension::IncomeBand: {
      std::size_t s = 0;
      while (s < seg.band_edges.size() && o.hh_income >= seg.band_edges[s]) ++s;
      return s;
    }
    case SegmentSpec::Dimension::TripPurpose:
      if (!o.trip_purpose) return std::nullopt;
      return static_cast<std::size_t>(std::clamp(*o.trip_purpose, 0, 2));
    case SegmentSpec::Dimension::Occupation:
      if (!o.occupation) return std::nullopt;
      return static_cast<std::size_t>(std::clamp(*o.occupation, 0, 2));
  }
  return std::nullopt;
}

inline std::string segment_name(const SegmentSpec& seg, std::size_t idx) {
  switch (seg.dimension) {
    case SegmentSpec::Dimension::Gender:
      return idx == 0 ? "male" : "female";
    case SegmentSpec::Dimension::IncomeBand: {
      if (idx == 0) return "income_lt_" + format_double(seg.band_edges[0]);
      if (idx == seg.band_edges.size())
        return "income_ge_" + format_double(seg.band_edges.back());
      return "income_" + format_double(seg.band_edges[idx - 1]) + "_" +
             format_double(seg.band_edges[idx]);
    }
    case SegmentSpec::Dimension::TripPurpose: {
      const char* names[] = {"work", "education", "leisure"};
      return names[idx];
    }
    case SegmentSpec::Dimension::Occupation: {
      const char* names[] = {"salaried", "wage_worker", "self_employed"};
      return names[idx];
    }
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Value of time

// Rupees a commuter trades for one minute of travel-time savings.
inline double value_of_time(double beta_tt, double beta_tc) {
  require(beta_tc != 0, Errc::ZeroCostCoefficient,
          "travel-cost coefficient is zero");
  return beta_tt / beta_tc;
}

struct SegmentVotRow {
  std::string segment;
  std::size_t n = 0;
  double beta_tt = 0;
  double beta_tc = 0;
  double vot = 0;
  bool skipped = false;  // empty segment or degenerate fit
  std::string note;
};

// Re-estimates the model on each segment's subset and reports the ratio of
// the time and cost coefficients.
inline std::vector<SegmentVotRow> segment_vot(const MnlSpec& spec,
                                              const Dataset& d,
                                              const SegmentSpec& seg,
                                              const EstimateOptions& opts = {}) {
  require(spec.use_travel_time && spec.use_travel_cost, Errc::ConfigError,
          "segment VOT needs both travel-time and travel-cost coefficients");
  require(spec.availability.empty(), Errc::ConfigError,
          "per-observation availability masks cannot be filtered by segment");

  std::vector<SegmentVotRow> rows;
  for (std::size_t s = 0; s < seg.count(); ++s) {
    SegmentVotRow row;
    row.segment = segment_name(seg, s);
    Dataset subset;
    for (const auto& o : d.observations)
      if (segment_of(seg, o) == s) subset.observations.push_back(o);
    row.n = subset.n();
    if (subset.empty()) {
      row.skipped = true;
      row.note = "empty segment";
      rows.push_back(std::move(row));
      continue;
    }
    // Terms whose feature is constant within the segment (the segmenting
    // feature itself, typically) are collinear with the constants and leave
    // the fit unidentified; drop them for this subset.
    MnlSpec reduced = spec;
    reduced.terms.clear();
    for (const auto& term : spec.terms) {
      if (term.feature == UtilityFeature::Asc) {
        reduced.terms.push_back(term);
        continue;
      }
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& o : subset.observations) {
        const double v = utility_feature_value(term.feature, o);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi > lo) reduced.terms.push_back(term);
    }
    MnlEstimate est = estimate_mnl(reduced, subset, opts);
    row.beta_tt = est.params[reduced.tt_slot()];
    row.beta_tc = est.params[reduced.tc_slot()];
    if (est.params[reduced.tc_slot()] == 0) {
      row.skipped = true;
      row.note = "zero cost coefficient";
    } else {
      row.vot = value_of_time(row.beta_tt, row.beta_tc);
      if (!est.converged) row.note = "estimate did not converge";
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Point elasticities
//
// Signed values straight from the formulas; a q% attribute change scales the
// point elasticity by q.

inline double self_elasticity(double p_i, double x_i, double beta) {
  require(p_i >= 0 && p_i <= 1, Errc::DimensionMismatch,
          "probability outside [0,1]");
  return (1.0 - p_i) * x_i * beta;
}

inline double cross_elasticity(double p_i, double x_i, double beta) {
  require(p_i >= 0 && p_i <= 1, Errc::DimensionMismatch,
          "probability outside [0,1]");
  return -p_i * x_i * beta;
}

// ---------------------------------------------------------------------------
// Logsum consumer surplus

// ln(sum_i e^{V_i}) with max-subtraction; the expected maximum utility of
// the choice set.
inline double logsum(const std::array<double, kNumModes>& V) {
  double vmax = -std::numeric_limits<double>::infinity();
  for (double v : V) vmax = std::max(vmax, v);
  require(std::isfinite(vmax), Errc::AllUnavailable,
          "logsum of an empty choice set");
  double z = 0.0;
  for (double v : V)
    if (std::isfinite(v)) z += std::exp(v - vmax);
  return vmax + std::log(z);
}

struct SurplusResult {
  std::vector<double> per_observation;
  double total = 0;
};

// Per-observation change in consumer surplus under a policy scenario:
// (1/alpha) * [logsum(V after) - logsum(V before)].
inline SurplusResult consumer_surplus_change(const MnlSpec& spec,
                                             const MnlParams& params,
                                             const Dataset& d,
                                             const Scenario& scenario,
                                             double alpha = 1.0) {
  require(alpha > 0, Errc::ConfigError, "alpha must be positive");
  validate_scenario(scenario);
  SurplusResult res;
  res.per_observation.resize(d.n());
  for (std::size_t n = 0; n < d.n(); ++n) {
    const auto mask = spec.mask_for(n);
    const double before =
        logsum(systematic_utilities(spec, params, d[n], mask));
    const auto perturbed = apply_scenario_to_obs(d[n], scenario);
    const double after =
        logsum(systematic_utilities(spec, params, perturbed, mask));
    res.per_observation[n] = (after - before) / alpha;
  }
  res.total = pairwise_sum(d.n(),
                           [&](std::size_t i) { return res.per_observation[i]; });
  return res;
}

struct SegmentSurplusRow {
  std::string segment;
  std::size_t n = 0;
  double total = 0;
  double mean = 0;
  bool empty = false;
};

inline std::vector<SegmentSurplusRow> segment_consumer_surplus(
    const MnlSpec& spec, const MnlParams& params, const Dataset& d,
    const Scenario& scenario, const SegmentSpec& seg, double alpha = 1.0) {
  const auto surplus = consumer_surplus_change(spec, params, d, scenario, alpha);
  std::vector<SegmentSurplusRow> rows(seg.count());
  for (std::size_t s = 0; s < seg.count(); ++s)
    rows[s].segment = segment_name(seg, s);
  for (std::size_t n = 0; n < d.n(); ++n) {
    const auto s = segment_of(seg, d[n]);
    require(s.has_value(), Errc::EmptySegment,
            "observation lacks the segment column for this dimension");
    rows[*s].total += surplus.per_observation[n];
    ++rows[*s].n;
  }
  for (auto& row : rows) {
    row.empty = row.n == 0;
    row.mean = row.n > 0 ? row.total / static_cast<double>(row.n) : 0.0;
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Aggregate elasticity reporting
//
// Per-observation point elasticities, share-weighted into one row per mode.
// attribute: cost uses tc_i and the cost coefficient, time uses tt_i and the
// time coefficient. A percent change q scales the point values by q.

struct ElasticityRow {
  ModeLabel mode;
  double self_elasticity = 0;
  double cross_elasticity = 0;  // response of every other alternative
};

inline std::vector<ElasticityRow> elasticity_table(const MnlSpec& spec,
                                                   const MnlParams& params,
                                                   const Dataset& d,
                                                   bool cost_attribute,
                                                   double percent = 1.0) {
  const int slot = cost_attribute ? spec.tc_slot() : spec.tt_slot();
  require(slot >= 0, Errc::ConfigError,
          "spec lacks the requested level-of-service coefficient");
  const double beta = params[slot];

  std::vector<ElasticityRow> rows;
  for (int i = 0; i < kNumModes; ++i) {
    double wsum = 0, self_acc = 0, cross_acc = 0;
    for (std::size_t n = 0; n < d.n(); ++n) {
      const auto p = choice_probabilities(
          systematic_utilities(spec, params, d[n], spec.mask_for(n)));
      const double x = cost_attribute ? d[n].travel_cost[i]
                                      : d[n].travel_time[i];
      const double w = p[i];
      self_acc += w * self_elasticity(p[i], x, beta);
      cross_acc += w * cross_elasticity(p[i], x, beta);
      wsum += w;
    }
    ElasticityRow row;
    row.mode = ModeLabel::from_index(i);
    if (wsum > 0) {
      row.self_elasticity = percent * self_acc / wsum;
      row.cross_elasticity = percent * cross_acc / wsum;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace modechoice
