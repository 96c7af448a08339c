#pragma once

// Model explanation: feature importance (boosting gain, forest mean decrease
// in impurity, tree weighted impurity, linear SVM weights, permutation),
// individual-conditional-expectation curves, and averaged scenario deltas.

#include "modechoice/econ.hpp"
#include "modechoice/eval.hpp"
#include "modechoice/model.hpp"

namespace modechoice {

enum class ImportanceMethod {
  Gain,                 // boosting: summed split gains
  MeanDecreaseImpurity, // forest: impurity decrease averaged over trees
  WeightedImpurity,     // tree: sum of node-weighted impurity decreases
  LinearWeight,         // linear SVM: max |w| over classes
  Permutation,          // any model: macro-F1 drop under column shuffling
};

inline const char* importance_method_name(ImportanceMethod m) {
  switch (m) {
    case ImportanceMethod::Gain: return "gain";
    case ImportanceMethod::MeanDecreaseImpurity: return "mdi";
    case ImportanceMethod::WeightedImpurity: return "weighted_impurity";
    case ImportanceMethod::LinearWeight: return "linear_weight";
    case ImportanceMethod::Permutation: return "permutation";
  }
  return "?";
}

inline ImportanceMethod importance_method_from_name(std::string_view n) {
  if (n == "gain") return ImportanceMethod::Gain;
  if (n == "mdi") return ImportanceMethod::MeanDecreaseImpurity;
  if (n == "weighted_impurity") return ImportanceMethod::WeightedImpurity;
  if (n == "linear_weight") return ImportanceMethod::LinearWeight;
  if (n == "permutation") return ImportanceMethod::Permutation;
  fail(Errc::ConfigError, "unknown importance method '" + std::string(n) + "'");
}

struct ImportanceReport {
  ImportanceMethod method;
  std::vector<std::string> features;
  std::vector<double> scores;
  bool normalized = false;  // tree methods normalize to sum 1
};

struct ImportanceOptions {
  int permutation_repeats = 10;
  std::uint64_t seed = 0;
};

namespace detail {

inline std::vector<double> tree_raw_importance(const DecisionTree& t) {
  std::vector<double> fi(static_cast<std::size_t>(t.n_features), 0.0);
  if (t.nodes.empty()) return fi;
  const double n_root = static_cast<double>(t.nodes[0].n_samples);
  for (const auto& node : t.nodes) {
    if (node.is_leaf()) continue;
    fi[node.feature] +=
        (static_cast<double>(node.n_samples) / n_root) * node.impurity_decrease;
  }
  return fi;
}

inline void normalize_scores(std::vector<double>& s) {
  double total = 0;
  for (double v : s) total += v;
  if (total > 0)
    for (double& v : s) v /= total;
}

}  // namespace detail

// Model-specific importances. Permutation needs evaluation data; the other
// methods are read off the trained model.
inline ImportanceReport feature_importance(
    const DatasetModel& model, ImportanceMethod method,
    const Dataset* eval_data = nullptr, const ImportanceOptions& opts = {}) {
  ImportanceReport rep;
  rep.method = method;
  rep.features = feature_names();

  const TrainedModel* tm = model.trained();
  auto check_kind = [&](ModelKind expected) {
    require(tm != nullptr && tm->kind() == expected, Errc::IncompatibleMethod,
            std::string(importance_method_name(method)) +
                " importance applies to " +
                model_kind_name(expected) + " models");
  };

  switch (method) {
    case ImportanceMethod::Gain: {
      check_kind(ModelKind::GradientBoost);
      const auto& gbt = std::get<BoostedModel>(tm->model);
      std::vector<double> fi(static_cast<std::size_t>(gbt.n_features), 0.0);
      for (const auto& round : gbt.rounds)
        for (const auto& tree : round)
          for (const auto& node : tree.nodes)
            if (!node.is_leaf()) fi[node.feature] += node.gain;
      detail::normalize_scores(fi);
      rep.scores = std::move(fi);
      rep.normalized = true;
      return rep;
    }
    case ImportanceMethod::MeanDecreaseImpurity: {
      check_kind(ModelKind::RandomForest);
      const auto& rf = std::get<RandomForest>(tm->model);
      std::vector<double> fi(static_cast<std::size_t>(rf.trees[0].n_features),
                             0.0);
      for (const auto& tree : rf.trees) {
        const auto per_tree = detail::tree_raw_importance(tree);
        for (std::size_t f = 0; f < fi.size(); ++f) fi[f] += per_tree[f];
      }
      for (double& v : fi) v /= static_cast<double>(rf.trees.size());
      detail::normalize_scores(fi);
      rep.scores = std::move(fi);
      rep.normalized = true;
      return rep;
    }
    case ImportanceMethod::WeightedImpurity: {
      check_kind(ModelKind::DecisionTree);
      auto fi = detail::tree_raw_importance(std::get<DecisionTree>(tm->model));
      detail::normalize_scores(fi);
      rep.scores = std::move(fi);
      rep.normalized = true;
      return rep;
    }
    case ImportanceMethod::LinearWeight: {
      check_kind(ModelKind::Svm);
      rep.scores =
          linear_weight_importance(std::get<SvmMulticlassModel>(tm->model));
      rep.normalized = false;
      return rep;
    }
    case ImportanceMethod::Permutation: {
      require(eval_data != nullptr && !eval_data->empty(),
              Errc::MissingEvalData,
              "permutation importance needs evaluation data");
      const auto y_true = label_vector(*eval_data);
      const double baseline =
          macro_f1_score(y_true, model.predict_labels(*eval_data));
      const std::size_t n = eval_data->n();
      std::vector<double> fi(kNumFeatures, 0.0);
      parallel_for(kNumFeatures, [&](std::size_t f) {
        double drop_sum = 0;
        for (int rep_i = 0; rep_i < opts.permutation_repeats; ++rep_i) {
          auto rng = make_rng(opts.seed, "permutation",
                              f * 1000 + static_cast<std::uint64_t>(rep_i));
          std::vector<std::size_t> perm(n);
          std::iota(perm.begin(), perm.end(), 0);
          std::shuffle(perm.begin(), perm.end(), rng);
          Dataset shuffled = *eval_data;
          for (std::size_t i = 0; i < n; ++i)
            set_feature(shuffled.observations[i], static_cast<int>(f),
                        get_feature((*eval_data)[perm[i]], static_cast<int>(f)));
          drop_sum +=
              baseline - macro_f1_score(y_true, model.predict_labels(shuffled));
        }
        fi[f] = drop_sum / opts.permutation_repeats;
      });
      rep.scores = std::move(fi);
      rep.normalized = false;
      return rep;
    }
  }
  fail(Errc::IncompatibleMethod, "unhandled importance method");
}

// ---------------------------------------------------------------------------
// Individual conditional expectation

struct IceCurve {
  std::int64_t instance_id = 0;
  std::string feature;
  std::vector<double> grid;
  std::vector<std::array<double, kNumModes>> probs;  // one vector per grid t
};

// Sweeps one feature over an evenly spaced grid for each instance, all other
// features held at their observed values. The grid spans the feature's
// observed range over `instances` unless an explicit range is given (e.g.
// the full test set's range while plotting a subsample).
inline std::vector<IceCurve> ice_curves(
    const DatasetModel& model, const Dataset& instances,
    std::string_view feature, int n_grid = 50,
    std::optional<std::pair<double, double>> range = std::nullopt) {
  const int f = feature_index(feature);
  require(f >= 0, Errc::UnknownSelector, std::string(feature));
  require(n_grid >= 2, Errc::ConfigError, "n_grid must be at least 2");
  require(!instances.empty(), Errc::EmptyDataset, "no instances");

  double lo, hi;
  if (range) {
    lo = range->first;
    hi = range->second;
  } else {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (const auto& o : instances.observations) {
      lo = std::min(lo, get_feature(o, f));
      hi = std::max(hi, get_feature(o, f));
    }
  }
  require(hi > lo, Errc::ConstantFeature,
          std::string(feature) + " is constant over the instances");

  std::vector<double> grid(static_cast<std::size_t>(n_grid));
  for (int g = 0; g < n_grid; ++g)
    grid[g] = lo + (hi - lo) * g / (n_grid - 1);

  std::vector<IceCurve> curves(instances.n());
  parallel_for(instances.n(), [&](std::size_t i) {
    IceCurve& curve = curves[i];
    curve.instance_id = instances[i].id;
    curve.feature = std::string(feature);
    curve.grid = grid;
    curve.probs.resize(grid.size());
    ChoiceObservation o = instances[i];
    for (std::size_t g = 0; g < grid.size(); ++g) {
      set_feature(o, f, grid[g]);
      curve.probs[g] = model.predict_row(o);
    }
  });
  return curves;
}

struct AverageIce {
  std::string feature;
  std::vector<double> grid;
  std::vector<std::array<double, kNumModes>> mean_probs;
};

inline AverageIce average_ice(const std::vector<IceCurve>& curves) {
  require(!curves.empty(), Errc::EmptyDataset, "no curves to average");
  AverageIce avg;
  avg.feature = curves[0].feature;
  avg.grid = curves[0].grid;
  avg.mean_probs.assign(avg.grid.size(), {});
  for (const auto& c : curves) {
    require(c.grid == avg.grid, Errc::GridMismatch,
            "curves were computed on different grids");
    for (std::size_t g = 0; g < avg.grid.size(); ++g)
      for (int k = 0; k < kNumModes; ++k)
        avg.mean_probs[g][k] += c.probs[g][k];
  }
  const double n = static_cast<double>(curves.size());
  for (auto& p : avg.mean_probs)
    for (double& v : p) v /= n;
  return avg;
}

// ---------------------------------------------------------------------------
// Scenario deltas
//
// Mean change in predicted probability per class, in percentage points,
// between the scenario-perturbed and the original features. Shares the
// per-observation perturbation kernel with the policy-scenario machinery, so
// this equals the two-dataset prediction difference exactly.

struct ScenarioDelta {
  std::string scenario;
  std::array<double, kNumModes> delta_pp{};
};

inline ScenarioDelta scenario_average_change(const DatasetModel& model,
                                             const Dataset& d,
                                             const Scenario& scenario) {
  validate_scenario(scenario);
  require(!d.empty(), Errc::EmptyDataset, "no observations");
  ScenarioDelta delta;
  delta.scenario = scenario.name;
  for (std::size_t i = 0; i < d.n(); ++i) {
    const auto before = model.predict_row(d[i]);
    const auto after = model.predict_row(apply_scenario_to_obs(d[i], scenario));
    for (int c = 0; c < kNumModes; ++c)
      delta.delta_pp[c] += after[c] - before[c];
  }
  for (double& v : delta.delta_pp)
    v *= 100.0 / static_cast<double>(d.n());
  return delta;
}

// ---------------------------------------------------------------------------
// Plot-data emission: long-format CSV for external plotting.

inline void emit_plot_data(const std::vector<IceCurve>& curves,
                           const std::filesystem::path& path) {
  std::string out = "instance_id,feature,grid_value,class,probability\n";
  for (const auto& c : curves)
    for (std::size_t g = 0; g < c.grid.size(); ++g)
      for (int k = 0; k < kNumModes; ++k) {
        out += std::to_string(c.instance_id);
        out += ',';
        out += c.feature;
        out += ',';
        out += format_double(c.grid[g]);
        out += ',';
        out += kModeTags[k];
        out += ',';
        out += format_double(c.probs[g][k]);
        out += '\n';
      }
  atomic_write_file(path, out);
}

inline void emit_plot_data(const ImportanceReport& rep,
                           const std::filesystem::path& path) {
  std::string out = "method,feature,score\n";
  for (std::size_t f = 0; f < rep.features.size(); ++f) {
    out += importance_method_name(rep.method);
    out += ',';
    out += rep.features[f];
    out += ',';
    out += format_double(rep.scores[f]);
    out += '\n';
  }
  atomic_write_file(path, out);
}

inline void emit_plot_data(const std::vector<ScenarioDelta>& deltas,
                           const std::filesystem::path& path) {
  std::string out = "scenario,class,delta_pp\n";
  for (const auto& d : deltas)
    for (int k = 0; k < kNumModes; ++k) {
      out += d.scenario;
      out += ',';
      out += kModeTags[k];
      out += ',';
      out += format_double(d.delta_pp[k]);
      out += '\n';
    }
  atomic_write_file(path, out);
}

}  // namespace modechoice
