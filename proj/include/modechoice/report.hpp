#pragma once

// End-to-end experiment: generate -> split -> estimate/tune/train ->
// evaluate -> explain -> policy analysis, emitting every table as CSV under
// the output directory. Outputs are deterministic for a fixed config; the
// only timestamp lives in model artifact metadata.

#include "modechoice/pipeline.hpp"
#include "modechoice/report_csv.hpp"

namespace modechoice {

struct PipelineModel {
  std::string name;
  ModelArtifact artifact;
  DatasetModel model;
  ParamMap hyper;
  double cv_score = std::numeric_limits<double>::quiet_NaN();
};

inline Scenario default_policy_scenario() {
  // Private modes 20% dearer, the metro fare matched to the bus fare.
  return Scenario{"private_up20_metro_to_bus",
                  {{"tc_tw", ScenarioRule::Op::Mul, 1.2, {}},
                   {"tc_car", ScenarioRule::Op::Mul, 1.2, {}},
                   {"tc_metro", ScenarioRule::Op::SetToFeature, 0, "tc_bus"}}};
}

inline void run_full_pipeline(const RunConfig& cfg,
                              const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  const fs::path models_dir = out_dir / "models";
  const fs::path tables_dir = out_dir / "tables";

  // 1. Data with known ground truth.
  SyntheticConfig gen;
  gen.n_observations = cfg.generate_n;
  gen.true_params = default_true_params();
  gen.rng_seed = derive_seed(cfg.seed, "generate");
  Dataset data = generate_synthetic(gen);
  write_csv(data, out_dir / "data.csv");

  auto [train, test] =
      stratified_split(data, cfg.train_fraction, derive_seed(cfg.seed, "split"));
  write_csv(train, out_dir / "train.csv");
  write_csv(test, out_dir / "test.csv");

  // 2. Estimation / tuning / training, in config order.
  std::vector<PipelineModel> models;
  for (const auto& name : cfg.models) {
    const ModelKind kind = model_kind_from_name(name);
    PipelineModel pm;
    pm.name = name;
    if (kind == ModelKind::Mnl) {
      pm.artifact = train_model(kind, train, {}, cfg);
      const auto doc = mnl_from_json(pm.artifact.model);
      write_mnl_estimate_tables(doc.spec, doc.estimate, tables_dir);
    } else {
      const auto search = tune_model(kind, train, cfg);
      write_tuning_log(search, tables_dir / ("tune_" + name + ".csv"));
      pm.hyper = search.best_params;
      pm.cv_score = search.best_score;
      pm.artifact = train_model(kind, train, search.best_params, cfg);
    }
    save_model(pm.artifact, models_dir / (name + ".json"));
    pm.model = pm.artifact.to_model();
    models.push_back(std::move(pm));
  }

  // 3. Evaluation tables.
  const auto y_train = label_vector(train);
  const auto y_test = label_vector(test);
  std::vector<ScoreRow> scores;
  std::vector<std::pair<std::string, NumMatrix>> share_inputs;
  for (const auto& pm : models) {
    const auto pred_train = pm.model.predict_labels(train);
    const auto pred_test = pm.model.predict_labels(test);
    const auto cm_train = confusion_matrix(y_train, pred_train);
    const auto cm_test = confusion_matrix(y_test, pred_test);
    write_confusion_tables(cm_train, tables_dir, pm.name + "_train");
    write_confusion_tables(cm_test, tables_dir, pm.name + "_test");

    ScoreRow row;
    row.model = pm.name;
    row.hyper = pm.hyper;
    row.cv_score = pm.cv_score;
    const auto rep_train = classification_report(cm_train);
    const auto rep_test = classification_report(cm_test);
    row.train_macro_f1 = rep_train.macro_f1;
    row.test_macro_f1 = rep_test.macro_f1;
    row.train_accuracy = rep_train.accuracy_percent;
    row.test_accuracy = rep_test.accuracy_percent;
    scores.push_back(row);

    if (pm.name != "svm")  // the SVM emits labels, not probabilities
      share_inputs.push_back({pm.name, pm.model.predict_matrix(test)});
  }
  write_score_table(scores, tables_dir / "model_scores.csv");
  if (!share_inputs.empty())
    write_modal_share_table(modal_share_report(share_inputs, y_test),
                            tables_dir / "modal_shares.csv");
  write_centroid_table(class_centroid_distances(data),
                       tables_dir / "centroid_distances.csv");

  // 4. Explanations.
  ImportanceOptions iopts;
  iopts.permutation_repeats = cfg.permutation_repeats;
  iopts.seed = derive_seed(cfg.seed, "permutation");
  for (const auto& pm : models) {
    std::optional<ImportanceReport> rep;
    switch (pm.model.kind()) {
      case ModelKind::DecisionTree:
        rep = feature_importance(pm.model, ImportanceMethod::WeightedImpurity);
        break;
      case ModelKind::RandomForest:
        rep = feature_importance(pm.model,
                                 ImportanceMethod::MeanDecreaseImpurity);
        break;
      case ModelKind::GradientBoost:
        rep = feature_importance(pm.model, ImportanceMethod::Gain);
        break;
      case ModelKind::Svm:
        rep = feature_importance(pm.model, ImportanceMethod::Permutation,
                                 &test, iopts);
        break;
      case ModelKind::Mnl:
        break;  // coefficients are the explanation
    }
    if (rep)
      emit_plot_data(*rep, tables_dir / ("importance_" + pm.name + ".csv"));
  }

  // ICE curves: per-instance plots on a deterministic subsample, averages
  // over the full test set; for the tree ensembles as published.
  Dataset ice_sample;
  {
    std::vector<std::size_t> idx(test.n());
    std::iota(idx.begin(), idx.end(), 0);
    auto rng = make_rng(cfg.seed, "ice-sample");
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(std::min<std::size_t>(50, idx.size()));
    std::sort(idx.begin(), idx.end());
    for (auto i : idx) ice_sample.observations.push_back(test[i]);
  }
  for (const auto& pm : models) {
    if (pm.model.kind() != ModelKind::RandomForest &&
        pm.model.kind() != ModelKind::GradientBoost)
      continue;
    for (const auto& feature : cfg.ice_features) {
      const int f = feature_index(feature);
      require(f >= 0, Errc::UnknownSelector, feature);
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const auto& o : test.observations) {
        lo = std::min(lo, get_feature(o, f));
        hi = std::max(hi, get_feature(o, f));
      }
      if (!(hi > lo)) continue;  // constant over the test set
      const auto range = std::pair<double, double>{lo, hi};
      auto curves =
          ice_curves(pm.model, ice_sample, feature, cfg.ice_grid, range);
      emit_plot_data(curves, tables_dir / ("ice_" + pm.name + "_" + feature +
                                           ".csv"));
      auto avg =
          average_ice(ice_curves(pm.model, test, feature, cfg.ice_grid, range));
      write_average_ice(avg, tables_dir / ("ice_avg_" + pm.name + "_" +
                                           feature + ".csv"));
    }
  }

  // Scenario deltas for the probability models, all configured presets.
  std::vector<std::pair<std::string, std::vector<ScenarioDelta>>> deltas;
  for (const auto& pm : models) {
    if (pm.name == "svm" || pm.name == "dt") continue;
    std::vector<ScenarioDelta> per_model;
    for (const auto& preset : cfg.scenarios)
      per_model.push_back(
          scenario_average_change(pm.model, test, scenario_preset(preset)));
    deltas.push_back({pm.name, std::move(per_model)});
  }
  if (!deltas.empty())
    write_scenario_delta_table(deltas, tables_dir / "scenario_deltas.csv");

  // 5. Econometric post-analysis on the fitted logit.
  for (const auto& pm : models) {
    if (pm.model.kind() != ModelKind::Mnl) continue;
    const auto doc = mnl_from_json(pm.artifact.model);
    write_elasticity_table(
        elasticity_table(doc.spec, doc.estimate.params, test, true,
                         cfg.elasticity_percent),
        elasticity_table(doc.spec, doc.estimate.params, test, false,
                         cfg.elasticity_percent),
        cfg.elasticity_percent, tables_dir / "elasticities.csv");

    std::vector<std::pair<std::string, std::vector<SegmentVotRow>>> vot_rows;
    for (const auto& dim : cfg.segments)
      vot_rows.push_back({dim, segment_vot(doc.spec, train,
                                           SegmentSpec::from_name(dim),
                                           cfg.mnl_options)});
    write_vot_table(vot_rows, tables_dir / "vot_segments.csv");

    const Scenario policy = cfg.policy ? *cfg.policy : default_policy_scenario();
    for (const auto& dim : cfg.segments) {
      const auto rows =
          segment_consumer_surplus(doc.spec, doc.estimate.params, test, policy,
                                   SegmentSpec::from_name(dim));
      write_surplus_table(policy.name, rows,
                          tables_dir / ("consumer_surplus_" + dim + ".csv"));
    }
  }
}

}  // namespace modechoice
