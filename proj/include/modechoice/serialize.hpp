#pragma once

// JSON persistence for scalers, the logit estimate, tree models and SVMs.
// Doubles rely on the library's shortest round-trip formatting, so rewriting
// a document reproduces values bit-exactly; NaN (unavailable standard
// errors) maps to null.

#include <json.hpp>

#include "modechoice/econ.hpp"
#include "modechoice/mnl.hpp"
#include "modechoice/svm.hpp"
#include "modechoice/trees.hpp"

namespace modechoice {

using json = nlohmann::json;

inline constexpr const char* kSchemaVersion = "1.0";

namespace detail {

inline json maybe_nan(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

inline double from_maybe_nan(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

template <class T>
T checked(const json& j, const char* key) {
  if (!j.contains(key))
    fail(Errc::CorruptArtifact, std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(Errc::CorruptArtifact, std::string("bad value for '") + key + "': " +
                                    e.what());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scaler

inline json to_json(const ScalerParams& s) {
  return json{{"min", s.min},
              {"max", s.max},
              {"pass_through", std::vector<int>(s.pass_through.begin(),
                                                s.pass_through.end())}};
}

inline ScalerParams scaler_from_json(const json& j) {
  ScalerParams s;
  s.min = detail::checked<std::vector<double>>(j, "min");
  s.max = detail::checked<std::vector<double>>(j, "max");
  for (int v : detail::checked<std::vector<int>>(j, "pass_through"))
    s.pass_through.push_back(v != 0);
  require(s.min.size() == s.max.size() &&
              s.min.size() == s.pass_through.size(),
          Errc::CorruptArtifact, "scaler arrays misaligned");
  return s;
}

// ---------------------------------------------------------------------------
// Logit spec and estimate

inline json to_json(const MnlSpec& spec) {
  json terms = json::array();
  for (const auto& t : spec.terms)
    terms.push_back(json{{"feature", utility_feature_tag(t.feature)},
                         {"alt", t.alternative.code()}});
  return json{{"reference", spec.reference.code()},
              {"travel_time", spec.use_travel_time},
              {"travel_cost", spec.use_travel_cost},
              {"terms", terms}};
}

inline MnlSpec spec_from_json(const json& j) {
  MnlSpec spec;
  spec.reference = ModeLabel(detail::checked<int>(j, "reference"));
  spec.use_travel_time = detail::checked<bool>(j, "travel_time");
  spec.use_travel_cost = detail::checked<bool>(j, "travel_cost");
  if (!j.contains("terms"))
    fail(Errc::CorruptArtifact, "missing key 'terms'");
  for (const auto& t : j.at("terms"))
    spec.terms.push_back(
        {utility_feature_from_tag(detail::checked<std::string>(t, "feature")),
         ModeLabel(detail::checked<int>(t, "alt"))});
  spec.validate();
  return spec;
}

inline json to_json(const MnlSpec& spec, const MnlEstimate& est) {
  json std_errors = json::array(), t_stats = json::array();
  for (double v : est.std_errors) std_errors.push_back(detail::maybe_nan(v));
  for (double v : est.t_stats) t_stats.push_back(detail::maybe_nan(v));
  return json{{"schema_version", kSchemaVersion},
              {"spec", to_json(spec)},
              {"slots", spec.slot_names()},
              {"values", est.params},
              {"std_errors", std_errors},
              {"t_stats", t_stats},
              {"ll_final", est.ll_final},
              {"ll_constants_only", est.ll_constants_only},
              {"rho2", est.rho2},
              {"adj_rho2", est.adj_rho2},
              {"n_obs", est.n_obs},
              {"converged", est.converged},
              {"iterations", est.iterations},
              {"std_errors_available", est.std_errors_available},
              {"quasi_separation", est.quasi_separation}};
}

struct MnlDocument {
  MnlSpec spec;
  MnlEstimate estimate;
};

inline MnlDocument mnl_from_json(const json& j) {
  const auto version = detail::checked<std::string>(j, "schema_version");
  require(version == kSchemaVersion, Errc::SchemaVersionMismatch,
          "estimate schema " + version);
  MnlDocument doc;
  if (!j.contains("spec")) fail(Errc::CorruptArtifact, "missing key 'spec'");
  doc.spec = spec_from_json(j.at("spec"));
  doc.estimate.params = detail::checked<std::vector<double>>(j, "values");
  for (const auto& v : j.at("std_errors"))
    doc.estimate.std_errors.push_back(detail::from_maybe_nan(v));
  for (const auto& v : j.at("t_stats"))
    doc.estimate.t_stats.push_back(detail::from_maybe_nan(v));
  doc.estimate.ll_final = detail::checked<double>(j, "ll_final");
  doc.estimate.ll_constants_only =
      detail::checked<double>(j, "ll_constants_only");
  doc.estimate.rho2 = detail::checked<double>(j, "rho2");
  doc.estimate.adj_rho2 = detail::checked<double>(j, "adj_rho2");
  doc.estimate.n_obs = detail::checked<std::size_t>(j, "n_obs");
  doc.estimate.converged = detail::checked<bool>(j, "converged");
  doc.estimate.iterations = detail::checked<std::size_t>(j, "iterations");
  doc.estimate.std_errors_available =
      detail::checked<bool>(j, "std_errors_available");
  doc.estimate.quasi_separation =
      detail::checked<bool>(j, "quasi_separation");
  require(doc.estimate.params.size() ==
              static_cast<std::size_t>(doc.spec.n_params()),
          Errc::CorruptArtifact, "estimate/spec slot mismatch");
  return doc;
}

// ---------------------------------------------------------------------------
// Trees

inline json to_json(const DecisionTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes)
    nodes.push_back(json{{"f", n.feature},
                         {"t", n.threshold},
                         {"l", n.left},
                         {"r", n.right},
                         {"counts", n.counts},
                         {"n", n.n_samples},
                         {"imp", n.impurity},
                         {"gain", n.impurity_decrease}});
  return json{{"criterion", criterion_name(t.criterion)},
              {"n_features", t.n_features},
              {"nodes", nodes}};
}

inline DecisionTree dtree_from_json(const json& j) {
  DecisionTree t;
  const auto crit = detail::checked<std::string>(j, "criterion");
  require(crit == "entropy" || crit == "gini", Errc::CorruptArtifact,
          "unknown criterion " + crit);
  t.criterion =
      crit == "entropy" ? SplitCriterion::Entropy : SplitCriterion::Gini;
  t.n_features = detail::checked<int>(j, "n_features");
  if (!j.contains("nodes")) fail(Errc::CorruptArtifact, "missing key 'nodes'");
  for (const auto& nj : j.at("nodes")) {
    DtNode n;
    n.feature = detail::checked<int>(nj, "f");
    n.threshold = detail::checked<double>(nj, "t");
    n.left = detail::checked<int>(nj, "l");
    n.right = detail::checked<int>(nj, "r");
    const auto counts = detail::checked<std::vector<std::int64_t>>(nj, "counts");
    require(counts.size() == kNumModes, Errc::CorruptArtifact,
            "node counts must have 8 entries");
    std::copy(counts.begin(), counts.end(), n.counts.begin());
    n.n_samples = detail::checked<std::int64_t>(nj, "n");
    n.impurity = detail::checked<double>(nj, "imp");
    n.impurity_decrease = detail::checked<double>(nj, "gain");
    t.nodes.push_back(n);
  }
  require(!t.nodes.empty(), Errc::CorruptArtifact, "tree has no nodes");
  return t;
}

inline json to_json(const RandomForest& f) {
  json trees = json::array();
  for (const auto& t : f.trees) trees.push_back(to_json(t));
  return json{{"n_trees", f.hyper.n_trees},
              {"max_depth", f.hyper.max_depth},
              {"features_per_split", f.hyper.features_per_split},
              {"bootstrap", f.hyper.bootstrap},
              {"seed", f.hyper.seed},
              {"trees", trees}};
}

inline RandomForest forest_from_json(const json& j) {
  RandomForest f;
  f.hyper.n_trees = detail::checked<int>(j, "n_trees");
  f.hyper.max_depth = detail::checked<int>(j, "max_depth");
  f.hyper.features_per_split = detail::checked<int>(j, "features_per_split");
  f.hyper.bootstrap = detail::checked<bool>(j, "bootstrap");
  f.hyper.seed = detail::checked<std::uint64_t>(j, "seed");
  if (!j.contains("trees")) fail(Errc::CorruptArtifact, "missing key 'trees'");
  for (const auto& tj : j.at("trees")) f.trees.push_back(dtree_from_json(tj));
  require(!f.trees.empty(), Errc::CorruptArtifact, "forest has no trees");
  return f;
}

inline json to_json(const RegTree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes)
    nodes.push_back(json{{"f", n.feature},
                         {"t", n.threshold},
                         {"l", n.left},
                         {"r", n.right},
                         {"w", n.weight},
                         {"gain", n.gain},
                         {"h", n.hessian_sum},
                         {"n", n.n_samples}});
  return nodes;
}

inline RegTree regtree_from_json(const json& j) {
  RegTree t;
  for (const auto& nj : j) {
    RegNode n;
    n.feature = detail::checked<int>(nj, "f");
    n.threshold = detail::checked<double>(nj, "t");
    n.left = detail::checked<int>(nj, "l");
    n.right = detail::checked<int>(nj, "r");
    n.weight = detail::checked<double>(nj, "w");
    n.gain = detail::checked<double>(nj, "gain");
    n.hessian_sum = detail::checked<double>(nj, "h");
    n.n_samples = detail::checked<std::int64_t>(nj, "n");
    t.nodes.push_back(n);
  }
  return t;
}

inline json to_json(const BoostedModel& m) {
  json rounds = json::array();
  for (const auto& round : m.rounds) {
    json per_class = json::array();
    for (const auto& tree : round) per_class.push_back(to_json(tree));
    rounds.push_back(per_class);
  }
  return json{{"max_depth", m.hyper.max_depth},
              {"eta", m.hyper.eta},
              {"gamma", m.hyper.gamma},
              {"n_rounds", m.hyper.n_rounds},
              {"min_child_weight", m.hyper.min_child_weight},
              {"seed", m.hyper.seed},
              {"class_present", std::vector<int>(m.class_present.begin(),
                                                 m.class_present.end())},
              {"base_score", m.base_score},
              {"n_features", m.n_features},
              {"rounds", rounds}};
}

inline BoostedModel boost_from_json(const json& j) {
  BoostedModel m;
  m.hyper.max_depth = detail::checked<int>(j, "max_depth");
  m.hyper.eta = detail::checked<double>(j, "eta");
  m.hyper.gamma = detail::checked<double>(j, "gamma");
  m.hyper.n_rounds = detail::checked<int>(j, "n_rounds");
  m.hyper.min_child_weight = detail::checked<double>(j, "min_child_weight");
  m.hyper.seed = detail::checked<std::uint64_t>(j, "seed");
  const auto present = detail::checked<std::vector<int>>(j, "class_present");
  const auto base = detail::checked<std::vector<double>>(j, "base_score");
  require(present.size() == kNumModes && base.size() == kNumModes,
          Errc::CorruptArtifact, "class arrays must have 8 entries");
  for (int c = 0; c < kNumModes; ++c) {
    m.class_present[c] = present[c] != 0;
    m.base_score[c] = base[c];
  }
  m.n_features = detail::checked<int>(j, "n_features");
  if (!j.contains("rounds"))
    fail(Errc::CorruptArtifact, "missing key 'rounds'");
  for (const auto& rj : j.at("rounds")) {
    std::array<RegTree, kNumModes> round;
    require(rj.size() == kNumModes, Errc::CorruptArtifact,
            "round must hold 8 trees");
    for (int c = 0; c < kNumModes; ++c) round[c] = regtree_from_json(rj[c]);
    m.rounds.push_back(std::move(round));
  }
  return m;
}

// ---------------------------------------------------------------------------
// SVM

inline json to_json(const KernelSpec& k) {
  return json{{"kind", k.kind == KernelSpec::Kind::Linear ? "linear" : "rbf"},
              {"gamma", k.gamma}};
}

inline KernelSpec kernel_from_json(const json& j) {
  const auto kind = detail::checked<std::string>(j, "kind");
  if (kind == "linear") return KernelSpec::linear();
  require(kind == "rbf", Errc::CorruptArtifact, "unknown kernel " + kind);
  return KernelSpec::rbf(detail::checked<double>(j, "gamma"));
}

inline json to_json(const SvmBinaryModel& m) {
  json sv = json::array();
  for (std::size_t r = 0; r < m.support_vectors.rows; ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.support_vectors.cols; ++c)
      row.push_back(m.support_vectors(r, c));
    sv.push_back(row);
  }
  return json{{"kernel", to_json(m.kernel)},
              {"C", m.C},
              {"support_vectors", sv},
              {"coefficients", m.coefficients},
              {"bias", m.bias},
              {"weights", m.weights},
              {"degenerate", m.degenerate},
              {"converged", m.converged},
              {"kkt_residual", m.kkt_residual}};
}

inline SvmBinaryModel svm_binary_from_json(const json& j, int n_features) {
  SvmBinaryModel m;
  if (!j.contains("kernel"))
    fail(Errc::CorruptArtifact, "missing key 'kernel'");
  m.kernel = kernel_from_json(j.at("kernel"));
  m.C = detail::checked<double>(j, "C");
  m.coefficients = detail::checked<std::vector<double>>(j, "coefficients");
  m.bias = detail::checked<double>(j, "bias");
  m.weights = detail::checked<std::vector<double>>(j, "weights");
  m.degenerate = detail::checked<bool>(j, "degenerate");
  m.converged = detail::checked<bool>(j, "converged");
  m.kkt_residual = detail::checked<double>(j, "kkt_residual");
  if (!j.contains("support_vectors"))
    fail(Errc::CorruptArtifact, "missing key 'support_vectors'");
  const auto& sv = j.at("support_vectors");
  m.support_vectors = NumMatrix(sv.size(), n_features);
  for (std::size_t r = 0; r < sv.size(); ++r) {
    require(sv[r].size() == static_cast<std::size_t>(n_features),
            Errc::CorruptArtifact, "support vector dimension mismatch");
    for (int c = 0; c < n_features; ++c)
      m.support_vectors(r, c) = sv[r][c].get<double>();
  }
  require(m.coefficients.size() == m.support_vectors.rows,
          Errc::CorruptArtifact, "coefficient/support-vector mismatch");
  return m;
}

inline json to_json(const SvmMulticlassModel& m) {
  json per_class = json::array();
  for (const auto& bin : m.per_class) per_class.push_back(to_json(bin));
  return json{{"kernel", to_json(m.kernel)},
              {"C", m.C},
              {"n_features", m.n_features},
              {"per_class", per_class}};
}

inline SvmMulticlassModel svm_from_json(const json& j) {
  SvmMulticlassModel m;
  if (!j.contains("kernel"))
    fail(Errc::CorruptArtifact, "missing key 'kernel'");
  m.kernel = kernel_from_json(j.at("kernel"));
  m.C = detail::checked<double>(j, "C");
  m.n_features = detail::checked<int>(j, "n_features");
  if (!j.contains("per_class"))
    fail(Errc::CorruptArtifact, "missing key 'per_class'");
  const auto& pc = j.at("per_class");
  require(pc.size() == kNumModes, Errc::CorruptArtifact,
          "multiclass model must hold 8 binary models");
  for (int c = 0; c < kNumModes; ++c)
    m.per_class[c] = svm_binary_from_json(pc[c], m.n_features);
  return m;
}

// ---------------------------------------------------------------------------
// Scenarios

inline json to_json(const Scenario& s) {
  json rules = json::array();
  for (const auto& r : s.rules) {
    json rj{{"selector", r.selector}};
    switch (r.op) {
      case ScenarioRule::Op::Mul:
        rj["op"] = "mul";
        rj["value"] = r.value;
        break;
      case ScenarioRule::Op::Set:
        rj["op"] = "set";
        rj["value"] = r.value;
        break;
      case ScenarioRule::Op::SetToFeature:
        rj["op"] = "set_to_feature";
        rj["value"] = r.feature;
        break;
    }
    rules.push_back(rj);
  }
  return json{{"name", s.name}, {"rules", rules}};
}

inline Scenario scenario_from_json(const json& j) {
  Scenario s;
  s.name = detail::checked<std::string>(j, "name");
  if (!j.contains("rules")) fail(Errc::CorruptArtifact, "missing key 'rules'");
  for (const auto& rj : j.at("rules")) {
    ScenarioRule r;
    r.selector = detail::checked<std::string>(rj, "selector");
    const auto op = detail::checked<std::string>(rj, "op");
    if (op == "mul") {
      r.op = ScenarioRule::Op::Mul;
      r.value = detail::checked<double>(rj, "value");
    } else if (op == "set") {
      r.op = ScenarioRule::Op::Set;
      r.value = detail::checked<double>(rj, "value");
    } else if (op == "set_to_feature") {
      r.op = ScenarioRule::Op::SetToFeature;
      r.feature = detail::checked<std::string>(rj, "value");
    } else {
      fail(Errc::CorruptArtifact, "unknown scenario op '" + op + "'");
    }
    s.rules.push_back(std::move(r));
  }
  validate_scenario(s);
  return s;
}

}  // namespace modechoice
