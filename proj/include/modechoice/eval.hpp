#pragma once

// Classifier evaluation: confusion matrices, per-class precision/recall/F1
// with macro averaging, exhaustive k-fold grid search, class-centroid
// distance diagnostics, and modal-share reporting.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "modechoice/data.hpp"

namespace modechoice {

struct ConfusionMatrix {
  std::array<std::array<std::int64_t, kNumModes>, kNumModes> m{};  // [actual][predicted]
  std::int64_t total = 0;
};

inline ConfusionMatrix confusion_matrix(const std::vector<int>& y_true,
                                        const std::vector<int>& y_pred) {
  require(y_true.size() == y_pred.size() && !y_true.empty(),
          Errc::LengthMismatch, "label vectors must be non-empty and aligned");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const int a = y_true[i], p = y_pred[i];
    require(a >= 1 && a <= kNumModes && p >= 1 && p <= kNumModes,
            Errc::BadLabel, "label outside 1..8 at position " +
                                std::to_string(i));
    ++cm.m[a - 1][p - 1];
    ++cm.total;
  }
  return cm;
}

struct ClassMetrics {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  bool present = false;  // appears in truth or prediction
};

struct MetricsReport {
  std::array<ClassMetrics, kNumModes> per_class{};
  double macro_f1 = 0;          // unweighted mean over present classes
  double accuracy_percent = 0;  // 0..100
};

// One-vs-rest metrics per class. Classes absent from both the truth and the
// prediction are excluded from the macro average; a zero-denominator
// precision or recall counts as zero.
inline MetricsReport classification_report(const ConfusionMatrix& cm) {
  require(cm.total > 0, Errc::EmptyMatrix, "empty confusion matrix");
  MetricsReport rep;
  std::int64_t trace = 0;
  double f1_sum = 0;
  int n_present = 0;
  for (int c = 0; c < kNumModes; ++c) {
    std::int64_t tp = cm.m[c][c], row = 0, col = 0;
    for (int j = 0; j < kNumModes; ++j) {
      row += cm.m[c][j];
      col += cm.m[j][c];
    }
    trace += tp;
    auto& pc = rep.per_class[c];
    pc.present = row > 0 || col > 0;
    pc.precision = col > 0 ? static_cast<double>(tp) / static_cast<double>(col)
                           : 0.0;
    pc.recall = row > 0 ? static_cast<double>(tp) / static_cast<double>(row)
                        : 0.0;
    pc.f1 = (pc.precision + pc.recall) > 0
                ? 2 * pc.precision * pc.recall / (pc.precision + pc.recall)
                : 0.0;
    if (pc.present) {
      f1_sum += pc.f1;
      ++n_present;
    }
  }
  rep.accuracy_percent =
      100.0 * static_cast<double>(trace) / static_cast<double>(cm.total);
  rep.macro_f1 = n_present > 0 ? f1_sum / n_present : 0.0;
  return rep;
}

inline double macro_f1_score(const std::vector<int>& y_true,
                             const std::vector<int>& y_pred) {
  return classification_report(confusion_matrix(y_true, y_pred)).macro_f1;
}

// ---------------------------------------------------------------------------
// Grid search with k-fold cross-validation
//
// The Cartesian product of the axes is enumerated with the last axis varying
// fastest; every combination is scored on the same fold partition by mean
// validation macro-F1, and ties keep the earliest combination in grid order.

using ParamMap = std::map<std::string, double>;

struct GridAxis {
  std::string name;
  std::vector<double> values;
};
using ParamGrid = std::vector<GridAxis>;

// A trainer builds a predictor from (X, y, params); the predictor maps a
// feature matrix to labels. Any exception marks that trial failed and the
// search continues.
using TrainedPredictor = std::function<std::vector<int>(const NumMatrix&)>;
using ModelTrainer = std::function<TrainedPredictor(
    const NumMatrix&, const std::vector<int>&, const ParamMap&)>;

struct TrialRecord {
  ParamMap params;
  std::vector<double> fold_scores;
  double mean_score = 0;
  bool failed = false;
  std::string error;
};

struct GridSearchResult {
  ParamMap best_params;
  double best_score = 0;
  std::size_t best_index = 0;
  std::vector<TrialRecord> trials;  // in grid enumeration order
  std::uint64_t fold_digest = 0;    // identifies the shared fold partition
};

inline std::uint64_t fold_partition_digest(
    const std::vector<FoldIndices>& folds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
  };
  for (const auto& f : folds) {
    mix(0xfeed);
    for (auto i : f.validation) mix(i + 1);
  }
  return h;
}

inline GridSearchResult grid_search_cv(const ModelTrainer& trainer,
                                       const ParamGrid& grid,
                                       const NumMatrix& X,
                                       const std::vector<int>& y,
                                       std::size_t k, std::uint64_t seed) {
  require(!grid.empty(), Errc::ConfigError, "empty hyperparameter grid");
  for (const auto& axis : grid)
    require(!axis.values.empty(), Errc::ConfigError,
            "grid axis '" + axis.name + "' has no values");
  require(X.rows == y.size() && X.rows > 0, Errc::LengthMismatch,
          "X and y must be aligned");

  const auto folds = kfold_indices(X.rows, k, seed);

  std::size_t n_combos = 1;
  for (const auto& axis : grid) n_combos *= axis.values.size();

  auto combo_params = [&](std::size_t index) {
    ParamMap p;
    std::size_t rest = index;
    for (std::size_t a = grid.size(); a-- > 0;) {
      const auto& axis = grid[a];
      p[axis.name] = axis.values[rest % axis.values.size()];
      rest /= axis.values.size();
    }
    return p;
  };

  auto subset = [&](const std::vector<std::size_t>& idx, NumMatrix& Xs,
                    std::vector<int>& ys) {
    Xs = NumMatrix(idx.size(), X.cols);
    ys.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      ys[i] = y[idx[i]];
      for (std::size_t c = 0; c < X.cols; ++c) Xs(i, c) = X(idx[i], c);
    }
  };

  GridSearchResult result;
  result.fold_digest = fold_partition_digest(folds);
  result.trials.resize(n_combos);

  parallel_for(n_combos, [&](std::size_t t) {
    TrialRecord& trial = result.trials[t];
    trial.params = combo_params(t);
    try {
      for (const auto& fold : folds) {
        NumMatrix Xtr, Xva;
        std::vector<int> ytr, yva;
        subset(fold.train, Xtr, ytr);
        subset(fold.validation, Xva, yva);
        auto predictor = trainer(Xtr, ytr, trial.params);
        trial.fold_scores.push_back(macro_f1_score(yva, predictor(Xva)));
      }
      trial.mean_score =
          pairwise_sum(trial.fold_scores.size(),
                       [&](std::size_t i) { return trial.fold_scores[i]; }) /
          static_cast<double>(trial.fold_scores.size());
    } catch (const std::exception& e) {
      trial.failed = true;
      trial.error = e.what();
      trial.mean_score = -std::numeric_limits<double>::infinity();
    }
  });

  bool any_ok = false;
  for (std::size_t t = 0; t < n_combos; ++t) {
    const auto& trial = result.trials[t];
    if (trial.failed) continue;
    if (!any_ok || trial.mean_score > result.best_score) {
      any_ok = true;
      result.best_score = trial.mean_score;
      result.best_params = trial.params;
      result.best_index = t;
    }
  }
  require(any_ok, Errc::ConfigError, "every grid combination failed");
  return result;
}

// ---------------------------------------------------------------------------
// Class-separability diagnostics

struct CentroidDistances {
  std::array<std::array<double, kNumModes>, kNumModes> distance{};
  std::array<bool, kNumModes> present{};
};

// Euclidean distances between per-class mean feature vectors on unscaled
// features. Absent classes are flagged and their rows left as NaN.
inline CentroidDistances class_centroid_distances(const Dataset& d) {
  CentroidDistances out;
  std::array<std::array<double, kNumFeatures>, kNumModes> centroid{};
  std::array<std::int64_t, kNumModes> count{};
  for (const auto& o : d.observations) {
    const int c = o.chosen.index();
    ++count[c];
    for (int f = 0; f < kNumFeatures; ++f)
      centroid[c][f] += get_feature(o, f);
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (int c = 0; c < kNumModes; ++c) {
    out.present[c] = count[c] > 0;
    for (int f = 0; f < kNumFeatures; ++f)
      if (count[c] > 0) centroid[c][f] /= static_cast<double>(count[c]);
  }
  for (int a = 0; a < kNumModes; ++a)
    for (int b = 0; b < kNumModes; ++b) {
      if (!out.present[a] || !out.present[b]) {
        out.distance[a][b] = nan;
        continue;
      }
      double d2 = 0;
      for (int f = 0; f < kNumFeatures; ++f) {
        const double diff = centroid[a][f] - centroid[b][f];
        d2 += diff * diff;
      }
      out.distance[a][b] = a == b ? 0.0 : std::sqrt(d2);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Modal shares
//
// Share of a mode is the average predicted probability over all rows, in
// percent. The deviation column is |predicted - actual| / 2, the population
// standard deviation of the two values.

struct ModalShareReport {
  std::vector<std::string> models;
  std::array<double, kNumModes> actual{};  // percent
  NumMatrix shares;      // models x 8, percent
  NumMatrix deviations;  // models x 8
};

inline ModalShareReport modal_share_report(
    const std::vector<std::pair<std::string, NumMatrix>>& prob_matrices,
    const std::vector<int>& actual) {
  require(!actual.empty(), Errc::LengthMismatch, "no evaluation rows");
  ModalShareReport rep;
  const double n = static_cast<double>(actual.size());
  for (int label : actual) {
    require(label >= 1 && label <= kNumModes, Errc::BadLabel,
            "label " + std::to_string(label));
    rep.actual[label - 1] += 100.0 / n;
  }

  rep.shares = NumMatrix(prob_matrices.size(), kNumModes);
  rep.deviations = NumMatrix(prob_matrices.size(), kNumModes);
  for (std::size_t m = 0; m < prob_matrices.size(); ++m) {
    const auto& [name, probs] = prob_matrices[m];
    rep.models.push_back(name);
    require(probs.rows == actual.size() && probs.cols == kNumModes,
            Errc::LengthMismatch,
            "probability matrix for " + name + " is misshapen");
    for (std::size_t r = 0; r < probs.rows; ++r) {
      double sum = 0;
      for (int c = 0; c < kNumModes; ++c) sum += probs(r, c);
      require(std::abs(sum - 1.0) <= 1e-9, Errc::RowNotNormalized,
              name + " row " + std::to_string(r) + " sums to " +
                  format_double(sum));
    }
    for (int c = 0; c < kNumModes; ++c) {
      double share = 0;
      for (std::size_t r = 0; r < probs.rows; ++r) share += probs(r, c);
      rep.shares(m, c) = 100.0 * share / n;
      rep.deviations(m, c) = std::abs(rep.shares(m, c) - rep.actual[c]) / 2.0;
    }
  }
  return rep;
}

// The two-value population standard deviation used by the deviation column.
inline double share_deviation(double actual_percent, double predicted_percent) {
  return std::abs(actual_percent - predicted_percent) / 2.0;
}

}  // namespace modechoice
