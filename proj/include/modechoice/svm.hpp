#pragma once

// Support vector machines: an SMO-style dual solver for the soft-margin
// binary problem, one-vs-rest multiclass on the eight mode codes, and
// linear-kernel weight importance.
//
// The solver follows the classic working-set scheme: scan for KKT
// violations, pick the partner by the largest error gap with randomized
// fallbacks, and solve each pair subproblem analytically. Every pair step
// maximizes the dual restricted to the pair, so the dual objective never
// decreases.

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "modechoice/data.hpp"

namespace modechoice {

struct KernelSpec {
  enum class Kind { Linear, Rbf };
  Kind kind = Kind::Rbf;
  double gamma = 1.0;  // rbf only

  static KernelSpec linear() { return {Kind::Linear, 0.0}; }
  static KernelSpec rbf(double gamma) {
    require(std::isfinite(gamma) && gamma > 0, Errc::ConfigError,
            "rbf gamma must be positive and finite");
    return {Kind::Rbf, gamma};
  }
};

inline double rbf_kernel(std::span<const double> x, std::span<const double> y,
                         double gamma) {
  require(x.size() == y.size(), Errc::DimensionMismatch,
          "kernel arguments differ in dimension");
  double d2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

inline double kernel_eval(const KernelSpec& k, std::span<const double> x,
                          std::span<const double> y) {
  require(x.size() == y.size(), Errc::DimensionMismatch,
          "kernel arguments differ in dimension");
  if (k.kind == KernelSpec::Kind::Linear) {
    double dot = 0;
    for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * y[i];
    return dot;
  }
  return rbf_kernel(x, y, k.gamma);
}

// Default rbf width 1/(p * Var(X)) with the variance pooled over all matrix
// entries, computed on whatever scaling the caller trains with.
inline double gamma_scale(const NumMatrix& X) {
  require(X.rows > 0 && X.cols > 0, Errc::EmptyDataset, "gamma of empty data");
  double mean = 0;
  for (double v : X.v) mean += v;
  mean /= static_cast<double>(X.v.size());
  double var = 0;
  for (double v : X.v) var += (v - mean) * (v - mean);
  var /= static_cast<double>(X.v.size());
  const double p = static_cast<double>(X.cols);
  return var > 0 ? 1.0 / (p * var) : 1.0 / p;
}

struct SvmOptions {
  double tol = 1e-3;
  int max_passes = 5;  // zero-progress full sweeps before giving up
  std::uint64_t seed = 0;
  std::size_t kernel_cache_limit = 3000;  // full-matrix cache cutoff (rows)
};

struct SvmBinaryModel {
  KernelSpec kernel;
  double C = 1.0;
  NumMatrix support_vectors;
  std::vector<double> coefficients;  // alpha_i * y_i per support vector
  double bias = 0;
  std::vector<double> weights;  // explicit w, linear kernel only
  bool degenerate = false;      // class absent from training: always negative
  bool converged = true;
  double kkt_residual = 0;

  double decision(std::span<const double> x) const {
    if (degenerate) return bias;
    if (kernel.kind == KernelSpec::Kind::Linear && !weights.empty()) {
      require(x.size() == weights.size(), Errc::DimensionMismatch,
              "feature dimension mismatch");
      double f = bias;
      for (std::size_t i = 0; i < x.size(); ++i) f += weights[i] * x[i];
      return f;
    }
    double f = bias;
    for (std::size_t s = 0; s < support_vectors.rows; ++s)
      f += coefficients[s] * kernel_eval(kernel, support_vectors.row(s), x);
    return f;
  }
};

// Dual objective sum(alpha) - 1/2 sum_ij alpha_i alpha_j y_i y_j K_ij;
// exposed for the solver oracle.
inline double svm_dual_objective(const NumMatrix& X, const std::vector<int>& y,
                                 const std::vector<double>& alpha,
                                 const KernelSpec& kernel) {
  double obj = 0;
  for (std::size_t i = 0; i < alpha.size(); ++i) obj += alpha[i];
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (alpha[i] == 0) continue;
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      if (alpha[j] == 0) continue;
      obj -= 0.5 * alpha[i] * alpha[j] * y[i] * y[j] *
             kernel_eval(kernel, X.row(i), X.row(j));
    }
  }
  return obj;
}

namespace detail {

// Kernel value provider: full symmetric matrix when it fits, otherwise a
// bounded FIFO row cache.
class KernelTable {
 public:
  KernelTable(const NumMatrix& X, const KernelSpec& kernel, std::size_t limit)
      : X_(X), kernel_(kernel), n_(X.rows), full_(X.rows <= limit) {
    if (full_) {
      dense_.assign(n_ * n_, 0.0);
      for (std::size_t i = 0; i < n_; ++i)
        for (std::size_t j = i; j < n_; ++j) {
          const double v = kernel_eval(kernel_, X_.row(i), X_.row(j));
          dense_[i * n_ + j] = v;
          dense_[j * n_ + i] = v;
        }
    } else {
      max_rows_ = std::max<std::size_t>(64, (limit * limit) / std::max<std::size_t>(n_, 1));
    }
  }

  const double* row(std::size_t i) {
    if (full_) return dense_.data() + i * n_;
    auto it = cache_.find(i);
    if (it != cache_.end()) return it->second.data();
    if (order_.size() >= max_rows_) {
      cache_.erase(order_.front());
      order_.erase(order_.begin());
    }
    std::vector<double> r(n_);
    for (std::size_t j = 0; j < n_; ++j)
      r[j] = kernel_eval(kernel_, X_.row(i), X_.row(j));
    order_.push_back(i);
    return cache_.emplace(i, std::move(r)).first->second.data();
  }

  double at(std::size_t i, std::size_t j) {
    if (full_) return dense_[i * n_ + j];
    return kernel_eval(kernel_, X_.row(i), X_.row(j));
  }

 private:
  const NumMatrix& X_;
  KernelSpec kernel_;
  std::size_t n_;
  bool full_;
  std::vector<double> dense_;
  std::unordered_map<std::size_t, std::vector<double>> cache_;
  std::vector<std::size_t> order_;
  std::size_t max_rows_ = 0;
};

struct SmoState {
  std::vector<double> alpha;
  std::vector<double> error;  // f(x_i) - y_i
  double b = 0;
};

}  // namespace detail

inline SvmBinaryModel fit_svm_binary(const NumMatrix& X,
                                     const std::vector<int>& y, double C,
                                     const KernelSpec& kernel,
                                     const SvmOptions& opts = {}) {
  const std::size_t n = X.rows;
  require(n >= 2 && n == y.size(), Errc::LengthMismatch,
          "need at least two aligned rows");
  require(C > 0, Errc::ConfigError, "C must be positive");
  bool pos = false, neg = false;
  for (int label : y) {
    require(label == 1 || label == -1, Errc::BadLabel, "labels must be +-1");
    if (label == 1) pos = true;
    else neg = true;
  }
  require(pos && neg, Errc::SingleClassData, "both labels must be present");

  detail::KernelTable K(X, kernel, opts.kernel_cache_limit);
  detail::SmoState st;
  st.alpha.assign(n, 0.0);
  st.error.resize(n);
  for (std::size_t i = 0; i < n; ++i) st.error[i] = -y[i];  // f == 0 initially

  auto rng = make_rng(opts.seed, "smo");
  const double eps = 1e-12;

  auto take_step = [&](std::size_t i1, std::size_t i2) -> bool {
    if (i1 == i2) return false;
    const double a1 = st.alpha[i1], a2 = st.alpha[i2];
    const double y1 = y[i1], y2 = y[i2];
    const double e1 = st.error[i1], e2 = st.error[i2];
    const double s = y1 * y2;
    double lo, hi;
    if (s < 0) {
      lo = std::max(0.0, a2 - a1);
      hi = std::min(C, C + a2 - a1);
    } else {
      lo = std::max(0.0, a2 + a1 - C);
      hi = std::min(C, a2 + a1);
    }
    if (lo >= hi) return false;
    const double k11 = K.at(i1, i1), k22 = K.at(i2, i2), k12 = K.at(i1, i2);
    const double eta = k11 + k22 - 2 * k12;
    double a2new;
    if (eta > 0) {
      a2new = std::clamp(a2 + y2 * (e1 - e2) / eta, lo, hi);
    } else {
      // Flat or concave pair direction: evaluate the endpoints.
      const double f1 = y1 * (e1 + st.b) - a1 * k11 - s * a2 * k12;
      const double f2 = y2 * (e2 + st.b) - s * a1 * k12 - a2 * k22;
      const double l1 = a1 + s * (a2 - lo);
      const double h1 = a1 + s * (a2 - hi);
      const double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 +
                            0.5 * lo * lo * k22 + s * lo * l1 * k12;
      const double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 +
                            0.5 * hi * hi * k22 + s * hi * h1 * k12;
      if (obj_lo < obj_hi - eps) a2new = lo;
      else if (obj_hi < obj_lo - eps) a2new = hi;
      else return false;
    }
    if (std::abs(a2new - a2) < eps * (a2new + a2 + eps)) return false;
    const double a1new = a1 + s * (a2 - a2new);

    // Threshold update (keeps at least one of the pair at zero KKT error).
    const double d1 = y1 * (a1new - a1), d2 = y2 * (a2new - a2);
    const double b1 = st.b - e1 - d1 * k11 - d2 * k12;
    const double b2 = st.b - e2 - d1 * k12 - d2 * k22;
    double bnew;
    if (a1new > eps && a1new < C - eps) bnew = b1;
    else if (a2new > eps && a2new < C - eps) bnew = b2;
    else bnew = 0.5 * (b1 + b2);

    const double* row1 = K.row(i1);
    const double* row2 = K.row(i2);
    for (std::size_t i = 0; i < n; ++i)
      st.error[i] += d1 * row1[i] + d2 * row2[i] + (bnew - st.b);
    st.alpha[i1] = a1new;
    st.alpha[i2] = a2new;
    st.b = bnew;
    return true;
  };

  auto examine = [&](std::size_t i2) -> bool {
    const double y2 = y[i2], a2 = st.alpha[i2], e2 = st.error[i2];
    const double r2 = e2 * y2;
    const bool violates =
        (r2 < -opts.tol && a2 < C) || (r2 > opts.tol && a2 > 0);
    if (!violates) return false;

    // Second choice: largest |E1 - E2| over the non-bound set.
    std::size_t best = n;
    double best_gap = -1;
    for (std::size_t i = 0; i < n; ++i) {
      if (st.alpha[i] <= eps || st.alpha[i] >= C - eps) continue;
      const double gap = std::abs(st.error[i] - e2);
      if (gap > best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (best < n && take_step(best, i2)) return true;

    // Fallbacks: non-bound sweep, then a full sweep, from random offsets.
    std::uniform_int_distribution<std::size_t> start(0, n - 1);
    std::size_t off = start(rng);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = (off + k) % n;
      if (st.alpha[i] <= eps || st.alpha[i] >= C - eps) continue;
      if (take_step(i, i2)) return true;
    }
    off = start(rng);
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = (off + k) % n;
      if (take_step(i, i2)) return true;
    }
    return false;
  };

  // Platt's alternation between full sweeps and non-bound sweeps.
  int stalled_full_sweeps = 0;
  bool examine_all = true;
  std::size_t guard = 0;
  const std::size_t max_sweeps = 2000;
  while (guard++ < max_sweeps) {
    std::size_t changed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!examine_all &&
          (st.alpha[i] <= eps || st.alpha[i] >= C - eps))
        continue;
      if (examine(i)) ++changed;
    }
    if (examine_all) {
      if (changed == 0) {
        if (++stalled_full_sweeps >= opts.max_passes) break;
      } else {
        stalled_full_sweeps = 0;
        examine_all = false;
      }
    } else if (changed == 0) {
      examine_all = true;
    }
  }

  // Assemble the model from the non-zero multipliers.
  SvmBinaryModel model;
  model.kernel = kernel;
  model.C = C;
  model.bias = st.b;
  std::vector<std::size_t> sv;
  for (std::size_t i = 0; i < n; ++i)
    if (st.alpha[i] > eps) sv.push_back(i);
  model.support_vectors = NumMatrix(sv.size(), X.cols);
  model.coefficients.resize(sv.size());
  for (std::size_t s = 0; s < sv.size(); ++s) {
    for (std::size_t c = 0; c < X.cols; ++c)
      model.support_vectors(s, c) = X(sv[s], c);
    model.coefficients[s] = st.alpha[sv[s]] * y[sv[s]];
  }
  if (kernel.kind == KernelSpec::Kind::Linear) {
    model.weights.assign(X.cols, 0.0);
    for (std::size_t s = 0; s < sv.size(); ++s)
      for (std::size_t c = 0; c < X.cols; ++c)
        model.weights[c] += model.coefficients[s] * model.support_vectors(s, c);
  }

  // KKT residual from scratch at the final multipliers.
  double residual = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double f = st.b;
    for (std::size_t s = 0; s < sv.size(); ++s)
      f += model.coefficients[s] * K.at(sv[s], i);
    const double margin = y[i] * f;
    if (st.alpha[i] < C - eps) residual = std::max(residual, 1.0 - margin);
    if (st.alpha[i] > eps) residual = std::max(residual, margin - 1.0);
  }
  model.kkt_residual = std::max(residual, 0.0);
  model.converged = model.kkt_residual <= opts.tol;
  return model;
}

// ---------------------------------------------------------------------------
// One-vs-rest multiclass

struct SvmMulticlassModel {
  std::array<SvmBinaryModel, kNumModes> per_class;
  KernelSpec kernel;
  double C = 1.0;
  int n_features = 0;
};

inline SvmMulticlassModel fit_svm_multiclass(const NumMatrix& X,
                                             const std::vector<int>& y,
                                             double C, const KernelSpec& kernel,
                                             const SvmOptions& opts = {}) {
  require(X.rows >= 2 && X.rows == y.size(), Errc::LengthMismatch,
          "need at least two aligned rows");
  std::array<bool, kNumModes> present{};
  int n_classes = 0;
  for (int label : y) {
    require(label >= 1 && label <= kNumModes, Errc::BadLabel,
            "label " + std::to_string(label));
    if (!present[label - 1]) {
      present[label - 1] = true;
      ++n_classes;
    }
  }
  require(n_classes >= 2, Errc::SingleClassData,
          "multiclass fit needs at least two classes");

  SvmMulticlassModel model;
  model.kernel = kernel;
  model.C = C;
  model.n_features = static_cast<int>(X.cols);
  parallel_for(kNumModes, [&](std::size_t c) {
    if (!present[c]) {
      SvmBinaryModel& m = model.per_class[c];
      m.kernel = kernel;
      m.C = C;
      m.bias = -1.0;  // degenerate: never wins the argmax
      m.degenerate = true;
      return;
    }
    std::vector<int> ybin(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
      ybin[i] = y[i] == static_cast<int>(c) + 1 ? 1 : -1;
    SvmOptions per = opts;
    per.seed = derive_seed(opts.seed, "svm-ovr", c);
    model.per_class[c] = fit_svm_binary(X, ybin, C, kernel, per);
  });
  return model;
}

struct SvmPrediction {
  int label = 1;
  std::array<double, kNumModes> decision_values{};
};

inline SvmPrediction predict_svm(const SvmMulticlassModel& m,
                                 std::span<const double> x) {
  require(static_cast<int>(x.size()) == m.n_features, Errc::DimensionMismatch,
          "feature dimension mismatch");
  SvmPrediction out;
  int best = 0;
  for (int c = 0; c < kNumModes; ++c) {
    out.decision_values[c] = m.per_class[c].decision(x);
    if (out.decision_values[c] > out.decision_values[best]) best = c;
  }
  out.label = best + 1;
  return out;
}

// Per-feature importance of a linear multiclass model: max over classes of
// the absolute hyperplane weight.
inline std::vector<double> linear_weight_importance(
    const SvmMulticlassModel& m) {
  require(m.kernel.kind == KernelSpec::Kind::Linear, Errc::NonLinearKernel,
          "weight importance needs a linear kernel; use permutation "
          "importance for rbf models");
  std::vector<double> fi(static_cast<std::size_t>(m.n_features), 0.0);
  for (const auto& bin : m.per_class) {
    if (bin.degenerate || bin.weights.empty()) continue;
    for (std::size_t f = 0; f < fi.size(); ++f)
      fi[f] = std::max(fi[f], std::abs(bin.weights[f]));
  }
  return fi;
}

}  // namespace modechoice
