#pragma once

// A tagged union over the trained classifier families, and a dataset-level
// predictor that binds a model to the feature schema (with its scaler) or to
// a fitted logit, so explanation and scenario tooling can treat them all as
// "observation in, class probabilities out".

#include <variant>

#include "modechoice/mnl.hpp"
#include "modechoice/serialize.hpp"
#include "modechoice/svm.hpp"
#include "modechoice/trees.hpp"

namespace modechoice {

enum class ModelKind { Mnl, DecisionTree, RandomForest, GradientBoost, Svm };

inline const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::Mnl: return "mnl";
    case ModelKind::DecisionTree: return "dt";
    case ModelKind::RandomForest: return "rf";
    case ModelKind::GradientBoost: return "gbt";
    case ModelKind::Svm: return "svm";
  }
  return "?";
}

inline ModelKind model_kind_from_name(std::string_view name) {
  if (name == "mnl") return ModelKind::Mnl;
  if (name == "dt") return ModelKind::DecisionTree;
  if (name == "rf") return ModelKind::RandomForest;
  if (name == "gbt") return ModelKind::GradientBoost;
  if (name == "svm") return ModelKind::Svm;
  fail(Errc::ConfigError, "unknown model kind '" + std::string(name) + "'");
}

struct TrainedModel {
  std::variant<DecisionTree, RandomForest, BoostedModel, SvmMulticlassModel>
      model;

  ModelKind kind() const {
    switch (model.index()) {
      case 0: return ModelKind::DecisionTree;
      case 1: return ModelKind::RandomForest;
      case 2: return ModelKind::GradientBoost;
      default: return ModelKind::Svm;
    }
  }

  int n_features() const {
    return std::visit(
        [](const auto& m) -> int {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, RandomForest>)
            return m.trees.empty() ? 0 : m.trees[0].n_features;
          else
            return m.n_features;
        },
        model);
  }

  // Class probabilities. The SVM has no probability calibration, so its
  // prediction is reported as a one-hot vector on the decision argmax.
  std::array<double, kNumModes> predict_proba(std::span<const double> x) const {
    if (const auto* dt = std::get_if<DecisionTree>(&model))
      return modechoice::predict_proba(*dt, x);
    if (const auto* rf = std::get_if<RandomForest>(&model))
      return modechoice::predict_proba(*rf, x);
    if (const auto* gbt = std::get_if<BoostedModel>(&model))
      return modechoice::predict_proba(*gbt, x);
    const auto& svm = std::get<SvmMulticlassModel>(model);
    std::array<double, kNumModes> p{};
    p[predict_svm(svm, x).label - 1] = 1.0;
    return p;
  }

  int predict(std::span<const double> x) const {
    return predict_label(predict_proba(x));
  }

  json to_json_doc() const {
    return std::visit([](const auto& m) { return to_json(m); }, model);
  }

  static TrainedModel from_json_doc(ModelKind kind, const json& j) {
    switch (kind) {
      case ModelKind::DecisionTree: return {dtree_from_json(j)};
      case ModelKind::RandomForest: return {forest_from_json(j)};
      case ModelKind::GradientBoost: return {boost_from_json(j)};
      case ModelKind::Svm: return {svm_from_json(j)};
      case ModelKind::Mnl: break;
    }
    fail(Errc::ConfigError, "a logit estimate is not a TrainedModel");
  }
};

// Observation-level probability model: either an ML model plus the scaler it
// was trained with, or a fitted logit on natural units.
class DatasetModel {
 public:
  static DatasetModel ml(TrainedModel model,
                         std::optional<ScalerParams> scaler) {
    DatasetModel m;
    m.ml_.emplace(std::move(model));
    m.scaler_ = std::move(scaler);
    return m;
  }

  static DatasetModel mnl(MnlSpec spec, MnlParams params) {
    require(static_cast<int>(params.size()) == spec.n_params(),
            Errc::DimensionMismatch, "parameter/slot count mismatch");
    DatasetModel m;
    m.spec_ = std::move(spec);
    m.spec_->availability.clear();  // observation-level API: full choice set
    m.params_ = std::move(params);
    return m;
  }

  ModelKind kind() const { return ml_ ? ml_->kind() : ModelKind::Mnl; }

  const TrainedModel* trained() const { return ml_ ? &*ml_ : nullptr; }
  const std::optional<ScalerParams>& scaler() const { return scaler_; }

  std::array<double, kNumModes> predict_row(const ChoiceObservation& o) const {
    if (!ml_)
      return choice_probabilities(systematic_utilities(*spec_, params_, o));
    std::array<double, kNumFeatures> row;
    for (int f = 0; f < kNumFeatures; ++f) row[f] = get_feature(o, f);
    if (scaler_) apply_minmax_row(*scaler_, row);
    return ml_->predict_proba(row);
  }

  int predict_row_label(const ChoiceObservation& o) const {
    return predict_label(predict_row(o));
  }

  NumMatrix predict_matrix(const Dataset& d) const {
    NumMatrix out(d.n(), kNumModes);
    for (std::size_t i = 0; i < d.n(); ++i) {
      const auto p = predict_row(d[i]);
      for (int c = 0; c < kNumModes; ++c) out(i, c) = p[c];
    }
    return out;
  }

  std::vector<int> predict_labels(const Dataset& d) const {
    std::vector<int> out(d.n());
    for (std::size_t i = 0; i < d.n(); ++i) out[i] = predict_row_label(d[i]);
    return out;
  }

 private:
  std::optional<TrainedModel> ml_;
  std::optional<ScalerParams> scaler_;
  std::optional<MnlSpec> spec_;
  MnlParams params_;
};

}  // namespace modechoice
