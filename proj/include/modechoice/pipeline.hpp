#pragma once

// Run configuration, model artifacts and the train/tune orchestration shared
// by the command-line tool and the end-to-end report. All randomness in a
// run flows from the single config seed through tagged stream derivation.

#include <chrono>
#include <ctime>

#include "modechoice/eval.hpp"
#include "modechoice/interpret.hpp"
#include "modechoice/model.hpp"
#include "modechoice/synthetic.hpp"

namespace modechoice {

// ---------------------------------------------------------------------------
// Published hyperparameter grids per model family. Callers normally narrow
// these in the run config; the full products are large.

inline ParamGrid table_grid(ModelKind kind) {
  auto seq = [](double lo, double hi, double step) {
    std::vector<double> v;
    for (double x = lo; x <= hi + 1e-9; x += step) v.push_back(x);
    return v;
  };
  switch (kind) {
    case ModelKind::DecisionTree:
      return {{"msl", seq(1, 20, 1)},
              {"md", seq(1, 20, 1)},
              {"ccp", {0.0, 1e-4, 1e-3, 1e-2}}};
    case ModelKind::RandomForest:
      return {{"n", {1, 10, 100, 1000, 10000}}, {"md", seq(1, 11, 1)}};
    case ModelKind::GradientBoost:
      return {{"md", {1, 3, 5, 7, 9, 11}},
              {"eta", {0.1, 0.01}},
              {"gamma", {0.0, 0.5, 1.0}},
              {"nt", seq(100, 500, 50)},
              {"mcw", {1, 3, 5, 7, 9, 11}}};
    case ModelKind::Svm:
      return {{"c", seq(0.1, 100.0, 0.1)}};
    case ModelKind::Mnl:
      break;
  }
  fail(Errc::ConfigError, "the logit model has no hyperparameter grid");
}

// ---------------------------------------------------------------------------
// Run configuration (JSON; unknown keys are rejected)

struct RunConfig {
  std::uint64_t seed = 42;
  std::string out_dir = "out";

  std::size_t generate_n = 5000;
  double train_fraction = 0.7;
  bool scale_features = true;

  std::vector<std::string> models = {"mnl", "dt", "rf", "gbt", "svm"};
  EstimateOptions mnl_options;

  std::size_t cv_folds = 5;
  std::map<std::string, ParamGrid> grids;  // per model kind name
  std::size_t svm_max_rows = 1500;         // SVM training row cap (0 = off)

  std::vector<std::string> scenarios = {"cost_up_10", "cost_up_20",
                                        "income_up_10", "time_down_10",
                                        "time_down_20"};
  std::vector<std::string> ice_features = {"tc_bus", "tt_bus", "hh_income"};
  int ice_grid = 50;
  int permutation_repeats = 10;

  std::vector<std::string> segments = {"gender", "income", "trip_purpose",
                                       "occupation"};
  std::optional<Scenario> policy;  // consumer-surplus policy scenario
  double elasticity_percent = 10.0;

  json to_json_doc() const;
  std::string digest() const { return fnv1a_hex(to_json_doc().dump()); }
};

namespace detail {

inline void reject_unknown_keys(const json& j,
                                std::initializer_list<const char*> allowed,
                                const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    require(ok, Errc::ConfigError,
            "unknown key '" + key + "' in " + where);
  }
}

inline ParamGrid grid_from_json(const json& j, ModelKind kind) {
  // Canonical axis order per family keeps enumeration deterministic no
  // matter how the JSON was written.
  ParamGrid canonical = table_grid(kind);
  ParamGrid out;
  std::set<std::string> seen;
  for (auto& axis : canonical) {
    if (!j.contains(axis.name)) continue;
    seen.insert(axis.name);
    GridAxis a;
    a.name = axis.name;
    for (const auto& v : j.at(axis.name)) a.values.push_back(v.get<double>());
    require(!a.values.empty(), Errc::ConfigError,
            "grid axis '" + a.name + "' is empty");
    out.push_back(std::move(a));
  }
  for (const auto& [key, value] : j.items())
    require(seen.count(key) > 0, Errc::ConfigError,
            "unknown grid axis '" + key + "'");
  // Unlisted axes keep a single default drawn from the family defaults.
  return out;
}

}  // namespace detail

inline json RunConfig::to_json_doc() const {
  json grids_json = json::object();
  for (const auto& [kind, grid] : grids) {
    json g = json::object();
    for (const auto& axis : grid) g[axis.name] = axis.values;
    grids_json[kind] = g;
  }
  json j{{"seed", seed},
         {"out_dir", out_dir},
         {"generate", json{{"n", generate_n}}},
         {"split", json{{"train_fraction", train_fraction}}},
         {"scale_features", scale_features},
         {"models", models},
         {"mnl", json{{"max_iter", mnl_options.max_iter},
                      {"grad_tol", mnl_options.grad_tol}}},
         {"tune", json{{"folds", cv_folds}, {"grids", grids_json}}},
         {"svm", json{{"max_rows", svm_max_rows}}},
         {"scenarios", scenarios},
         {"interpret", json{{"ice_features", ice_features},
                            {"n_grid", ice_grid},
                            {"permutation_repeats", permutation_repeats}}},
         {"econ", json{{"segments", segments},
                       {"elasticity_percent", elasticity_percent}}}};
  if (policy) j["econ"]["policy"] = to_json(*policy);
  return j;
}

inline RunConfig config_from_json(const json& j) {
  detail::reject_unknown_keys(
      j,
      {"seed", "out_dir", "generate", "split", "scale_features", "models",
       "mnl", "tune", "svm", "scenarios", "interpret", "econ"},
      "config");
  RunConfig cfg;
  if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("generate")) {
    detail::reject_unknown_keys(j.at("generate"), {"n"}, "generate");
    if (j.at("generate").contains("n"))
      cfg.generate_n = j.at("generate").at("n").get<std::size_t>();
  }
  if (j.contains("split")) {
    detail::reject_unknown_keys(j.at("split"), {"train_fraction"}, "split");
    if (j.at("split").contains("train_fraction"))
      cfg.train_fraction = j.at("split").at("train_fraction").get<double>();
    require(cfg.train_fraction > 0 && cfg.train_fraction < 1,
            Errc::ConfigError, "train_fraction must lie in (0,1)");
  }
  if (j.contains("scale_features"))
    cfg.scale_features = j.at("scale_features").get<bool>();
  if (j.contains("models")) {
    cfg.models.clear();
    for (const auto& m : j.at("models")) {
      const auto name = m.get<std::string>();
      model_kind_from_name(name);  // validates
      cfg.models.push_back(name);
    }
  }
  if (j.contains("mnl")) {
    detail::reject_unknown_keys(j.at("mnl"), {"max_iter", "grad_tol"}, "mnl");
    if (j.at("mnl").contains("max_iter"))
      cfg.mnl_options.max_iter = j.at("mnl").at("max_iter").get<std::size_t>();
    if (j.at("mnl").contains("grad_tol"))
      cfg.mnl_options.grad_tol = j.at("mnl").at("grad_tol").get<double>();
  }
  if (j.contains("tune")) {
    detail::reject_unknown_keys(j.at("tune"), {"folds", "grids"}, "tune");
    if (j.at("tune").contains("folds"))
      cfg.cv_folds = j.at("tune").at("folds").get<std::size_t>();
    if (j.at("tune").contains("grids"))
      for (const auto& [kind_name, grid_json] : j.at("tune").at("grids").items())
        cfg.grids[kind_name] = detail::grid_from_json(
            grid_json, model_kind_from_name(kind_name));
  }
  if (j.contains("svm")) {
    detail::reject_unknown_keys(j.at("svm"), {"max_rows"}, "svm");
    if (j.at("svm").contains("max_rows"))
      cfg.svm_max_rows = j.at("svm").at("max_rows").get<std::size_t>();
  }
  if (j.contains("scenarios")) {
    cfg.scenarios.clear();
    for (const auto& s : j.at("scenarios"))
      cfg.scenarios.push_back(s.get<std::string>());
  }
  if (j.contains("interpret")) {
    detail::reject_unknown_keys(
        j.at("interpret"), {"ice_features", "n_grid", "permutation_repeats"},
        "interpret");
    const auto& ji = j.at("interpret");
    if (ji.contains("ice_features")) {
      cfg.ice_features.clear();
      for (const auto& f : ji.at("ice_features"))
        cfg.ice_features.push_back(f.get<std::string>());
    }
    if (ji.contains("n_grid")) cfg.ice_grid = ji.at("n_grid").get<int>();
    if (ji.contains("permutation_repeats"))
      cfg.permutation_repeats = ji.at("permutation_repeats").get<int>();
  }
  if (j.contains("econ")) {
    detail::reject_unknown_keys(
        j.at("econ"), {"segments", "policy", "elasticity_percent"}, "econ");
    const auto& je = j.at("econ");
    if (je.contains("segments")) {
      cfg.segments.clear();
      for (const auto& s : je.at("segments"))
        cfg.segments.push_back(s.get<std::string>());
    }
    if (je.contains("policy")) cfg.policy = scenario_from_json(je.at("policy"));
    if (je.contains("elasticity_percent"))
      cfg.elasticity_percent = je.at("elasticity_percent").get<double>();
  }
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(Errc::ConfigError, "cannot parse " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Model artifacts

struct ModelArtifact {
  std::string schema_version = kSchemaVersion;
  ModelKind kind = ModelKind::Mnl;
  json model;  // family-specific document
  std::optional<ScalerParams> scaler;
  std::vector<std::string> feature_schema;  // binding for ML models

  std::uint64_t seed = 0;
  std::string timestamp;  // metadata only; never reaches table outputs
  std::string config_digest;
  ParamMap hyper;

  DatasetModel to_model() const {
    if (kind == ModelKind::Mnl) {
      auto doc = mnl_from_json(model);
      return DatasetModel::mnl(doc.spec, doc.estimate.params);
    }
    return DatasetModel::ml(TrainedModel::from_json_doc(kind, model), scaler);
  }
};

inline std::string current_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(
      std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void save_model(const ModelArtifact& a,
                       const std::filesystem::path& path) {
  json j{{"schema_version", a.schema_version},
         {"kind", model_kind_name(a.kind)},
         {"model", a.model},
         {"feature_schema", a.feature_schema},
         {"metadata", json{{"seed", a.seed},
                           {"timestamp", a.timestamp},
                           {"config_digest", a.config_digest}}},
         {"hyper", a.hyper}};
  if (a.scaler) j["scaler"] = to_json(*a.scaler);
  atomic_write_file(path, j.dump(2) + "\n");
}

inline ModelArtifact load_model(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    fail(Errc::CorruptArtifact,
         "cannot parse " + path.string() + ": " + e.what());
  }
  ModelArtifact a;
  a.schema_version = detail::checked<std::string>(j, "schema_version");
  require(a.schema_version == kSchemaVersion, Errc::SchemaVersionMismatch,
          "artifact schema " + a.schema_version + ", expected " +
              kSchemaVersion);
  a.kind = model_kind_from_name(detail::checked<std::string>(j, "kind"));
  if (!j.contains("model")) fail(Errc::CorruptArtifact, "missing key 'model'");
  a.model = j.at("model");
  a.feature_schema =
      detail::checked<std::vector<std::string>>(j, "feature_schema");
  if (a.kind != ModelKind::Mnl)
    require(a.feature_schema == feature_names(), Errc::SchemaMismatch,
            "artifact was trained on a different feature schema");
  if (j.contains("scaler")) a.scaler = scaler_from_json(j.at("scaler"));
  if (j.contains("metadata")) {
    const auto& meta = j.at("metadata");
    if (meta.contains("seed")) a.seed = meta.at("seed").get<std::uint64_t>();
    if (meta.contains("timestamp"))
      a.timestamp = meta.at("timestamp").get<std::string>();
    if (meta.contains("config_digest"))
      a.config_digest = meta.at("config_digest").get<std::string>();
  }
  if (j.contains("hyper"))
    for (const auto& [key, value] : j.at("hyper").items())
      a.hyper[key] = value.get<double>();
  a.to_model();  // validates the embedded document
  return a;
}

// ---------------------------------------------------------------------------
// Training and tuning

inline ScalerParams fit_minmax(const NumMatrix& X) {
  require(X.rows > 0, Errc::EmptyDataset, "fit_minmax on empty matrix");
  ScalerParams s;
  s.min.assign(X.cols, std::numeric_limits<double>::infinity());
  s.max.assign(X.cols, -std::numeric_limits<double>::infinity());
  s.pass_through.assign(X.cols, false);
  for (std::size_t r = 0; r < X.rows; ++r)
    for (std::size_t c = 0; c < X.cols; ++c) {
      s.min[c] = std::min(s.min[c], X(r, c));
      s.max[c] = std::max(s.max[c], X(r, c));
    }
  if (X.cols == static_cast<std::size_t>(kNumFeatures))
    for (int f = 0; f < kNumFeatures; ++f)
      s.pass_through[f] = is_categorical_feature(f);
  return s;
}

namespace detail {

inline Dataset subsample_rows(const Dataset& d, std::size_t cap,
                              std::uint64_t seed) {
  if (cap == 0 || d.n() <= cap) return d;
  std::vector<std::size_t> idx(d.n());
  std::iota(idx.begin(), idx.end(), 0);
  auto rng = make_rng(seed, "row-cap");
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  Dataset out;
  out.schema_version = d.schema_version;
  for (auto i : idx) out.observations.push_back(d[i]);
  return out;
}

inline TreeHyper tree_hyper_from(const ParamMap& p) {
  TreeHyper h;
  if (p.count("msl")) h.min_samples_leaf = static_cast<int>(p.at("msl"));
  if (p.count("md")) h.max_depth = static_cast<int>(p.at("md"));
  if (p.count("ccp")) h.ccp_alpha = p.at("ccp");
  return h;
}

inline ForestHyper forest_hyper_from(const ParamMap& p, std::uint64_t seed) {
  ForestHyper h;
  if (p.count("n")) h.n_trees = static_cast<int>(p.at("n"));
  if (p.count("md")) h.max_depth = static_cast<int>(p.at("md"));
  h.seed = seed;
  return h;
}

inline BoostHyper boost_hyper_from(const ParamMap& p) {
  BoostHyper h;
  if (p.count("md")) h.max_depth = static_cast<int>(p.at("md"));
  if (p.count("eta")) h.eta = p.at("eta");
  if (p.count("gamma")) h.gamma = p.at("gamma");
  if (p.count("nt")) h.n_rounds = static_cast<int>(p.at("nt"));
  if (p.count("mcw")) h.min_child_weight = p.at("mcw");
  return h;
}

}  // namespace detail

// Trainer closure for grid search: scales inside each fold (bounds from the
// fold's training part only) and returns a label predictor.
inline ModelTrainer make_trainer(ModelKind kind, bool scale,
                                 std::uint64_t seed) {
  return [kind, scale, seed](const NumMatrix& X, const std::vector<int>& y,
                             const ParamMap& params) -> TrainedPredictor {
    std::optional<ScalerParams> scaler;
    NumMatrix Xt = X;
    if (scale) {
      scaler = fit_minmax(X);
      Xt = apply_minmax(*scaler, X);
    }
    TrainedModel model;
    switch (kind) {
      case ModelKind::DecisionTree:
        model.model = fit_decision_tree(Xt, y, detail::tree_hyper_from(params));
        break;
      case ModelKind::RandomForest:
        model.model = fit_random_forest(
            Xt, y, detail::forest_hyper_from(params, derive_seed(seed, "rf-cv")));
        break;
      case ModelKind::GradientBoost:
        model.model = fit_gradient_boost(Xt, y, detail::boost_hyper_from(params));
        break;
      case ModelKind::Svm: {
        SvmOptions opts;
        opts.seed = derive_seed(seed, "svm-cv");
        model.model = fit_svm_multiclass(Xt, y, params.at("c"),
                                         KernelSpec::rbf(gamma_scale(Xt)), opts);
        break;
      }
      case ModelKind::Mnl:
        fail(Errc::ConfigError, "the logit model is not grid searched");
    }
    auto shared = std::make_shared<TrainedModel>(std::move(model));
    auto scaler_copy = scaler;
    return [shared, scaler_copy](const NumMatrix& Xe) {
      NumMatrix Xs = Xe;
      if (scaler_copy) Xs = apply_minmax(*scaler_copy, Xe);
      std::vector<int> out(Xs.rows);
      for (std::size_t i = 0; i < Xs.rows; ++i)
        out[i] = shared->predict(Xs.row(i));
      return out;
    };
  };
}

inline GridSearchResult tune_model(ModelKind kind, const Dataset& train,
                                   const RunConfig& cfg) {
  require(kind != ModelKind::Mnl, Errc::ConfigError,
          "the logit model is estimated, not tuned");
  const auto it = cfg.grids.find(model_kind_name(kind));
  const ParamGrid grid =
      it != cfg.grids.end() ? it->second : table_grid(kind);
  Dataset data = kind == ModelKind::Svm
                     ? detail::subsample_rows(train, cfg.svm_max_rows,
                                              derive_seed(cfg.seed, "svm-cap"))
                     : train;
  return grid_search_cv(make_trainer(kind, cfg.scale_features, cfg.seed), grid,
                        to_feature_matrix(data), label_vector(data),
                        cfg.cv_folds, derive_seed(cfg.seed, "cv-folds"));
}

// Fits one model on the training partition with fixed hyperparameters and
// wraps it into a persistable artifact.
inline ModelArtifact train_model(ModelKind kind, const Dataset& train,
                                 const ParamMap& hyper, const RunConfig& cfg) {
  require(!train.empty(), Errc::EmptyDataset, "training on empty data");
  ModelArtifact artifact;
  artifact.kind = kind;
  artifact.seed = cfg.seed;
  artifact.timestamp = current_timestamp();
  artifact.config_digest = cfg.digest();
  artifact.hyper = hyper;
  artifact.feature_schema = feature_names();

  if (kind == ModelKind::Mnl) {
    // The logit consumes natural units; no scaler.
    MnlSpec spec = MnlSpec::default_spec();
    MnlEstimate est = estimate_mnl(spec, train, cfg.mnl_options);
    artifact.model = to_json(spec, est);
    return artifact;
  }

  Dataset data = kind == ModelKind::Svm
                     ? detail::subsample_rows(train, cfg.svm_max_rows,
                                              derive_seed(cfg.seed, "svm-cap"))
                     : train;
  NumMatrix X = to_feature_matrix(data);
  const auto y = label_vector(data);
  if (cfg.scale_features) {
    artifact.scaler = fit_minmax(X);
    X = apply_minmax(*artifact.scaler, X);
  }

  TrainedModel model;
  switch (kind) {
    case ModelKind::DecisionTree:
      model.model = fit_decision_tree(X, y, detail::tree_hyper_from(hyper));
      break;
    case ModelKind::RandomForest:
      model.model = fit_random_forest(
          X, y,
          detail::forest_hyper_from(hyper, derive_seed(cfg.seed, "rf-train")));
      break;
    case ModelKind::GradientBoost:
      model.model = fit_gradient_boost(X, y, detail::boost_hyper_from(hyper));
      break;
    case ModelKind::Svm: {
      SvmOptions opts;
      opts.seed = derive_seed(cfg.seed, "svm-train");
      const double C = hyper.count("c") ? hyper.at("c") : 1.0;
      model.model =
          fit_svm_multiclass(X, y, C, KernelSpec::rbf(gamma_scale(X)), opts);
      break;
    }
    case ModelKind::Mnl:
      break;  // handled above
  }
  artifact.model = model.to_json_doc();
  return artifact;
}

}  // namespace modechoice
