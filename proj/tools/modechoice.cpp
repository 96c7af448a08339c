// Command-line surface for the mode-choice toolkit:
//   generate | split | train | tune | evaluate | interpret | econ | report
// Exit codes: 0 success, 1 validation/usage error, 2 runtime failure.

#include <CLI11.hpp>

#include <iostream>

#include "modechoice/report.hpp"

namespace mc = modechoice;

namespace {

mc::ParamMap parse_hyper(const std::string& text) {
  mc::ParamMap out;
  if (text.empty()) return out;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    const std::string item = text.substr(start, end - start);
    const std::size_t eq = item.find('=');
    mc::require(eq != std::string::npos, mc::Errc::ConfigError,
                "hyperparameter '" + item + "' is not key=value");
    out[item.substr(0, eq)] = mc::parse_double(item.substr(eq + 1));
    start = end + 1;
  }
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    if (end > start) out.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

mc::ImportanceMethod default_method(mc::ModelKind kind) {
  switch (kind) {
    case mc::ModelKind::DecisionTree:
      return mc::ImportanceMethod::WeightedImpurity;
    case mc::ModelKind::RandomForest:
      return mc::ImportanceMethod::MeanDecreaseImpurity;
    case mc::ModelKind::GradientBoost:
      return mc::ImportanceMethod::Gain;
    default:
      return mc::ImportanceMethod::Permutation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mode-choice modeling toolkit"};
  app.require_subcommand(1);

  // --- generate ---
  auto* gen = app.add_subcommand("generate", "Generate a synthetic survey");
  std::size_t gen_n = 5000;
  std::uint64_t gen_seed = 42;
  std::string gen_out = "data.csv";
  bool gen_no_segments = false;
  gen->add_option("--n", gen_n, "Number of observations");
  gen->add_option("--seed", gen_seed, "Master seed");
  gen->add_option("--out", gen_out, "Output CSV path");
  gen->add_flag("--no-segments", gen_no_segments,
                "Skip trip_purpose/occupation columns");

  // --- split ---
  auto* split = app.add_subcommand("split", "Stratified train/test split");
  std::string split_data, split_train = "train.csv", split_test = "test.csv";
  double split_fraction = 0.7;
  std::uint64_t split_seed = 42;
  split->add_option("--data", split_data, "Input CSV")->required();
  split->add_option("--train-fraction", split_fraction, "Training share");
  split->add_option("--seed", split_seed, "Master seed");
  split->add_option("--out-train", split_train, "Training CSV path");
  split->add_option("--out-test", split_test, "Test CSV path");

  // --- train ---
  auto* train = app.add_subcommand("train", "Fit one model");
  std::string train_model_name, train_data, train_out = "model.json";
  std::string train_hyper;
  std::uint64_t train_seed = 42;
  bool train_no_scale = false;
  std::size_t train_svm_rows = 1500;
  train->add_option("--model", train_model_name, "mnl|dt|rf|gbt|svm")
      ->required();
  train->add_option("--data", train_data, "Training CSV")->required();
  train->add_option("--out", train_out, "Artifact path");
  train->add_option("--hyper", train_hyper, "key=value,... hyperparameters");
  train->add_option("--seed", train_seed, "Master seed");
  train->add_flag("--no-scale", train_no_scale, "Skip min-max scaling");
  train->add_option("--svm-max-rows", train_svm_rows,
                    "SVM training row cap (0 = unlimited)");

  // --- tune ---
  auto* tune = app.add_subcommand("tune", "Cross-validated grid search");
  std::string tune_model_name, tune_data, tune_grid_file;
  std::string tune_out = "best.json", tune_log = "trials.csv";
  std::size_t tune_folds = 5;
  std::uint64_t tune_seed = 42;
  bool tune_no_scale = false;
  std::size_t tune_svm_rows = 1500;
  tune->add_option("--model", tune_model_name, "dt|rf|gbt|svm")->required();
  tune->add_option("--data", tune_data, "Training CSV")->required();
  tune->add_option("--grid-file", tune_grid_file,
                   "JSON grid {axis: [values...]}; defaults to the published "
                   "ranges");
  tune->add_option("--folds", tune_folds, "Cross-validation folds");
  tune->add_option("--seed", tune_seed, "Master seed");
  tune->add_option("--out", tune_out, "Best-combination JSON path");
  tune->add_option("--log", tune_log, "Trial log CSV path");
  tune->add_flag("--no-scale", tune_no_scale, "Skip min-max scaling");
  tune->add_option("--svm-max-rows", tune_svm_rows, "SVM row cap");

  // --- evaluate ---
  auto* evaluate = app.add_subcommand("evaluate", "Score models on a dataset");
  std::vector<std::string> eval_models;
  std::string eval_data, eval_dir = "eval";
  evaluate->add_option("--model", eval_models, "Model artifact(s)")
      ->required()
      ->expected(-1);
  evaluate->add_option("--data", eval_data, "Evaluation CSV")->required();
  evaluate->add_option("--out-dir", eval_dir, "Output directory");

  // --- interpret ---
  auto* interpret = app.add_subcommand("interpret", "Explain a model");
  std::string int_model, int_data, int_dir = "interpret";
  std::string int_method = "auto", int_ice, int_scenarios;
  int int_grid = 50, int_repeats = 10;
  std::uint64_t int_seed = 42;
  interpret->add_option("--model", int_model, "Model artifact")->required();
  interpret->add_option("--data", int_data, "Evaluation CSV")->required();
  interpret->add_option("--out-dir", int_dir, "Output directory");
  interpret->add_option("--method", int_method,
                        "auto|gain|mdi|weighted_impurity|linear_weight|"
                        "permutation|none");
  interpret->add_option("--ice", int_ice, "Comma-separated ICE features");
  interpret->add_option("--n-grid", int_grid, "ICE grid points");
  interpret->add_option("--scenario", int_scenarios,
                        "Comma-separated scenario presets");
  interpret->add_option("--repeats", int_repeats, "Permutation repeats");
  interpret->add_option("--seed", int_seed, "Master seed");

  // --- econ ---
  auto* econ = app.add_subcommand("econ", "Logit policy analysis");
  std::string econ_model, econ_data, econ_dir = "econ";
  std::string econ_segments = "gender,income,trip_purpose,occupation";
  std::string econ_scenario_file;
  double econ_percent = 10.0;
  econ->add_option("--model", econ_model, "Fitted logit artifact")->required();
  econ->add_option("--data", econ_data, "Dataset CSV")->required();
  econ->add_option("--out-dir", econ_dir, "Output directory");
  econ->add_option("--segments", econ_segments, "Comma-separated dimensions");
  econ->add_option("--scenario-file", econ_scenario_file,
                   "Policy scenario JSON (default: private modes +20%, metro "
                   "fare set to bus fare)");
  econ->add_option("--percent", econ_percent, "Elasticity percent change");

  // --- report ---
  auto* report = app.add_subcommand("report", "Run the full pipeline");
  std::string report_config, report_dir;
  report->add_option("--config", report_config, "Run config JSON")->required();
  report->add_option("--out-dir", report_dir, "Override the config out_dir");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*gen) {
      mc::SyntheticConfig cfg;
      cfg.n_observations = gen_n;
      cfg.true_params = mc::default_true_params();
      cfg.rng_seed = mc::derive_seed(gen_seed, "generate");
      cfg.with_segments = !gen_no_segments;
      mc::write_csv(mc::generate_synthetic(cfg), gen_out);
    } else if (*split) {
      const auto d = mc::load_csv(split_data);
      auto [tr, te] = mc::stratified_split(d, split_fraction,
                                           mc::derive_seed(split_seed, "split"));
      mc::write_csv(tr, split_train);
      mc::write_csv(te, split_test);
    } else if (*train) {
      mc::RunConfig cfg;
      cfg.seed = train_seed;
      cfg.scale_features = !train_no_scale;
      cfg.svm_max_rows = train_svm_rows;
      const auto kind = mc::model_kind_from_name(train_model_name);
      const auto d = mc::load_csv(train_data);
      const auto artifact =
          mc::train_model(kind, d, parse_hyper(train_hyper), cfg);
      mc::save_model(artifact, train_out);
    } else if (*tune) {
      mc::RunConfig cfg;
      cfg.seed = tune_seed;
      cfg.scale_features = !tune_no_scale;
      cfg.svm_max_rows = tune_svm_rows;
      cfg.cv_folds = tune_folds;
      const auto kind = mc::model_kind_from_name(tune_model_name);
      if (!tune_grid_file.empty())
        cfg.grids[tune_model_name] = mc::detail::grid_from_json(
            mc::json::parse(mc::read_file(tune_grid_file)), kind);
      const auto d = mc::load_csv(tune_data);
      const auto res = mc::tune_model(kind, d, cfg);
      mc::write_tuning_log(res, tune_log);
      mc::json best{{"model", tune_model_name},
                    {"best_params", mc::json::object()},
                    {"best_cv_macro_f1", res.best_score},
                    {"fold_digest", res.fold_digest}};
      for (const auto& [k, v] : res.best_params) best["best_params"][k] = v;
      mc::atomic_write_file(tune_out, best.dump(2) + "\n");
    } else if (*evaluate) {
      const auto d = mc::load_csv(eval_data);
      const auto y = mc::label_vector(d);
      std::vector<mc::ScoreRow> scores;
      std::vector<std::pair<std::string, mc::NumMatrix>> share_inputs;
      for (const auto& path : eval_models) {
        const auto artifact = mc::load_model(path);
        const std::string name = mc::model_kind_name(artifact.kind);
        const auto model = artifact.to_model();
        const auto cm = mc::confusion_matrix(y, model.predict_labels(d));
        mc::write_confusion_tables(cm, eval_dir, name);
        const auto rep = mc::classification_report(cm);
        mc::ScoreRow row;
        row.model = name;
        row.hyper = artifact.hyper;
        row.test_macro_f1 = rep.macro_f1;
        row.test_accuracy = rep.accuracy_percent;
        row.train_macro_f1 = row.train_accuracy =
            std::numeric_limits<double>::quiet_NaN();
        scores.push_back(row);
        if (artifact.kind != mc::ModelKind::Svm)
          share_inputs.push_back({name, model.predict_matrix(d)});
      }
      mc::write_score_table(scores,
                            std::filesystem::path(eval_dir) / "model_scores.csv");
      if (!share_inputs.empty())
        mc::write_modal_share_table(
            mc::modal_share_report(share_inputs, y),
            std::filesystem::path(eval_dir) / "modal_shares.csv");
      mc::write_centroid_table(
          mc::class_centroid_distances(d),
          std::filesystem::path(eval_dir) / "centroid_distances.csv");
    } else if (*interpret) {
      const auto artifact = mc::load_model(int_model);
      const auto model = artifact.to_model();
      const auto d = mc::load_csv(int_data);
      const std::filesystem::path dir = int_dir;
      const std::string name = mc::model_kind_name(artifact.kind);

      if (int_method != "none" && artifact.kind != mc::ModelKind::Mnl) {
        const auto method = int_method == "auto"
                                ? default_method(artifact.kind)
                                : mc::importance_method_from_name(int_method);
        mc::ImportanceOptions opts;
        opts.permutation_repeats = int_repeats;
        opts.seed = mc::derive_seed(int_seed, "permutation");
        const auto rep = mc::feature_importance(model, method, &d, opts);
        mc::emit_plot_data(rep, dir / ("importance_" + name + ".csv"));
      }
      for (const auto& feature : split_list(int_ice)) {
        auto curves = mc::ice_curves(model, d, feature, int_grid);
        mc::emit_plot_data(curves,
                           dir / ("ice_" + name + "_" + feature + ".csv"));
        mc::write_average_ice(
            mc::average_ice(curves),
            dir / ("ice_avg_" + name + "_" + feature + ".csv"));
      }
      const auto presets = split_list(int_scenarios);
      if (!presets.empty()) {
        std::vector<mc::ScenarioDelta> deltas;
        for (const auto& preset : presets)
          deltas.push_back(mc::scenario_average_change(
              model, d, mc::scenario_preset(preset)));
        mc::emit_plot_data(deltas, dir / ("scenario_deltas_" + name + ".csv"));
      }
    } else if (*econ) {
      const auto artifact = mc::load_model(econ_model);
      mc::require(artifact.kind == mc::ModelKind::Mnl, mc::Errc::ConfigError,
                  "econ analysis needs a fitted logit artifact");
      const auto doc = mc::mnl_from_json(artifact.model);
      const auto d = mc::load_csv(econ_data);
      const std::filesystem::path dir = econ_dir;

      mc::write_elasticity_table(
          mc::elasticity_table(doc.spec, doc.estimate.params, d, true,
                               econ_percent),
          mc::elasticity_table(doc.spec, doc.estimate.params, d, false,
                               econ_percent),
          econ_percent, dir / "elasticities.csv");

      std::vector<std::pair<std::string, std::vector<mc::SegmentVotRow>>> vot;
      for (const auto& dim : split_list(econ_segments))
        vot.push_back({dim, mc::segment_vot(doc.spec, d,
                                            mc::SegmentSpec::from_name(dim))});
      mc::write_vot_table(vot, dir / "vot_segments.csv");

      const mc::Scenario policy =
          econ_scenario_file.empty()
              ? mc::default_policy_scenario()
              : mc::scenario_from_json(
                    mc::json::parse(mc::read_file(econ_scenario_file)));
      for (const auto& dim : split_list(econ_segments)) {
        const auto rows = mc::segment_consumer_surplus(
            doc.spec, doc.estimate.params, d, policy,
            mc::SegmentSpec::from_name(dim));
        mc::write_surplus_table(policy.name, rows,
                                dir / ("consumer_surplus_" + dim + ".csv"));
      }
    } else if (*report) {
      auto cfg = mc::load_config(report_config);
      if (!report_dir.empty()) cfg.out_dir = report_dir;
      mc::run_full_pipeline(cfg, cfg.out_dir);
    }
  } catch (const mc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.is_validation() ? 1 : 2;
  } catch (const mc::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
