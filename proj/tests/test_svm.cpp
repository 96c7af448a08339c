#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <random>

#include "modechoice/svm.hpp"
#include "oracles.hpp"

using namespace modechoice;

namespace {

NumMatrix matrix_from(const std::vector<std::vector<double>>& rows) {
  NumMatrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

// Three well-separated Gaussian blobs mapped to classes 1, 2, 3.
std::pair<NumMatrix, std::vector<int>> blobs(std::size_t per_class,
                                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.5);
  const double cx[3] = {0, 4, 0}, cy[3] = {0, 0, 4};
  NumMatrix X(3 * per_class, 2);
  std::vector<int> y(3 * per_class);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < per_class; ++i) {
      const std::size_t r = c * per_class + i;
      X(r, 0) = cx[c] + g(rng);
      X(r, 1) = cy[c] + g(rng);
      y[r] = c + 1;
    }
  return {std::move(X), std::move(y)};
}

void check_dual_feasibility(const SvmBinaryModel& m) {
  double sum = 0;
  for (double c : m.coefficients) {
    CHECK(std::abs(c) <= m.C + 1e-9);  // 0 <= alpha <= C
    sum += c;
  }
  CHECK(std::abs(sum) <= 1e-6);  // sum alpha_i y_i == 0
}

}  // namespace

TEST_CASE("rbf kernel basics") {
  std::vector<double> a = {1, 2, 3}, b = {1, 2, 3}, c = {1, 2, 4};
  CHECK(rbf_kernel(a, b, 2.0) == 1.0);
  CHECK(rbf_kernel(a, c, 1.0) == Catch::Approx(std::exp(-1.0)));
  CHECK(rbf_kernel(a, c, 1e-12) == Catch::Approx(1.0).margin(1e-9));
  std::vector<double> d = {1, 2};
  CHECK_THROWS_AS(rbf_kernel(a, d, 1.0), Error);
}

TEST_CASE("kernel matrices are positive semi-definite") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int rep = 0; rep < 3; ++rep) {
    NumMatrix X(20, 4);
    for (auto& v : X.v) v = u(rng);
    for (auto kernel : {KernelSpec::rbf(0.7), KernelSpec::linear()}) {
      Eigen::MatrixXd K(20, 20);
      for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j)
          K(i, j) = kernel_eval(kernel, X.row(i), X.row(j));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
      CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
    }
  }
}

TEST_CASE("two opposite points give the maximum-margin separator") {
  NumMatrix X = matrix_from({{1, 0}, {-1, 0}});
  std::vector<int> y = {1, -1};
  SvmBinaryModel m = fit_svm_binary(X, y, 1000.0, KernelSpec::linear());
  REQUIRE(m.converged);
  REQUIRE(m.support_vectors.rows == 2);
  REQUIRE(m.weights.size() == 2);
  CHECK(m.weights[0] == Catch::Approx(1.0).margin(1e-6));
  CHECK(m.weights[1] == Catch::Approx(0.0).margin(1e-9));
  CHECK(m.bias == Catch::Approx(0.0).margin(1e-6));
  check_dual_feasibility(m);
}

TEST_CASE("linearly separable fixture reaches the enumerated margin") {
  // Ten points in 2-D, separable with a slanted boundary.
  std::vector<std::array<double, 2>> pts = {
      {0.0, 0.0}, {1.0, 0.5}, {0.5, 1.2}, {1.5, 1.0}, {0.2, 0.8},
      {4.0, 3.0}, {5.0, 3.5}, {4.5, 4.5}, {3.8, 4.2}, {5.2, 4.8}};
  std::vector<int> y = {-1, -1, -1, -1, -1, 1, 1, 1, 1, 1};
  NumMatrix X(10, 2);
  for (int i = 0; i < 10; ++i) {
    X(i, 0) = pts[i][0];
    X(i, 1) = pts[i][1];
  }

  SvmOptions opts;
  opts.tol = 1e-6;
  SvmBinaryModel m = fit_svm_binary(X, y, 1e6, KernelSpec::linear(), opts);
  REQUIRE(m.converged);
  check_dual_feasibility(m);

  std::size_t correct = 0;
  for (int i = 0; i < 10; ++i)
    if ((m.decision(X.row(i)) > 0 ? 1 : -1) == y[i]) ++correct;
  CHECK(correct == 10);

  const double wnorm = std::hypot(m.weights[0], m.weights[1]);
  const double achieved = 1.0 / wnorm;  // hard-margin geometric margin
  const double oracle = oracles::max_margin_2d(pts, y);
  CHECK(achieved == Catch::Approx(oracle).epsilon(0.02));
}

TEST_CASE("rbf solves the xor pattern") {
  NumMatrix X = matrix_from({{0, 0}, {1, 1}, {0, 1}, {1, 0}});
  std::vector<int> y = {1, 1, -1, -1};
  SvmBinaryModel m = fit_svm_binary(X, y, 100.0, KernelSpec::rbf(1.0));
  REQUIRE(m.converged);
  for (int i = 0; i < 4; ++i)
    CHECK((m.decision(X.row(i)) > 0 ? 1 : -1) == y[i]);
  check_dual_feasibility(m);
}

TEST_CASE("six-point dual matches exhaustive grid search within 1e-3") {
  NumMatrix X = matrix_from(
      {{0.2, 1.1}, {1.0, 0.3}, {0.4, 0.6}, {2.2, 2.0}, {1.8, 2.6}, {2.8, 1.7}});
  std::vector<int> y = {-1, -1, -1, 1, 1, 1};
  for (double C : {0.5, 2.0}) {
    for (auto kernel : {KernelSpec::rbf(0.8), KernelSpec::linear()}) {
      SvmOptions opts;
      opts.tol = 1e-5;
      SvmBinaryModel m = fit_svm_binary(X, y, C, kernel, opts);
      REQUIRE(m.converged);
      const double smo = oracles::svm_dual_from_model(m);
      const double grid = oracles::svm_grid_search_dual(X, y, C, kernel);
      CHECK(std::abs(smo - grid) <= 1e-3);
      CHECK(m.kkt_residual <= 1e-3);
    }
  }
}

TEST_CASE("dual feasibility holds on random soft-margin problems") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g(0, 1);
  for (int rep = 0; rep < 4; ++rep) {
    NumMatrix X(40, 3);
    std::vector<int> y(40);
    for (int i = 0; i < 40; ++i) {
      for (int f = 0; f < 3; ++f) X(i, f) = g(rng) + (i % 2 ? 0.7 : -0.7);
      y[i] = i % 2 ? 1 : -1;
    }
    SvmBinaryModel m = fit_svm_binary(X, y, 1.5, KernelSpec::rbf(0.5));
    check_dual_feasibility(m);
    if (m.converged) CHECK(m.kkt_residual <= 1e-3);
  }
}

TEST_CASE("prediction is invariant to training-row order") {
  auto [X, y] = blobs(8, 21);
  std::vector<int> ybin(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) ybin[i] = y[i] == 1 ? 1 : -1;

  SvmOptions opts;
  opts.tol = 1e-10;
  opts.max_passes = 20;
  SvmBinaryModel a = fit_svm_binary(X, ybin, 10.0, KernelSpec::rbf(0.6), opts);

  std::vector<std::size_t> perm(X.rows);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(3);
  std::shuffle(perm.begin(), perm.end(), rng);
  NumMatrix Xp(X.rows, X.cols);
  std::vector<int> yp(X.rows);
  for (std::size_t i = 0; i < X.rows; ++i) {
    yp[i] = ybin[perm[i]];
    for (std::size_t c = 0; c < X.cols; ++c) Xp(i, c) = X(perm[i], c);
  }
  SvmBinaryModel b = fit_svm_binary(Xp, yp, 10.0, KernelSpec::rbf(0.6), opts);
  REQUIRE(a.converged);
  REQUIRE(b.converged);

  std::uniform_real_distribution<double> u(-1, 5);
  for (int probe = 0; probe < 10; ++probe) {
    std::vector<double> x = {u(rng), u(rng)};
    CHECK(a.decision(x) == Catch::Approx(b.decision(x)).margin(1e-6));
  }
}

TEST_CASE("one-vs-rest multiclass") {
  SECTION("two-class data builds exactly two live models and agrees with them") {
    auto [X, y] = blobs(10, 31);
    std::vector<int> y2(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) y2[i] = y[i] == 1 ? 1 : 2;
    SvmMulticlassModel m = fit_svm_multiclass(X, y2, 5.0, KernelSpec::rbf(0.7));
    int live = 0;
    for (const auto& bin : m.per_class)
      if (!bin.degenerate) ++live;
    CHECK(live == 2);
    for (std::size_t i = 0; i < X.rows; ++i) {
      const auto pred = predict_svm(m, X.row(i));
      const double f1 = m.per_class[0].decision(X.row(i));
      CHECK(pred.label == (f1 > m.per_class[1].decision(X.row(i)) ? 1 : 2));
    }
  }

  SECTION("deterministic given the seed") {
    auto [X, y] = blobs(10, 32);
    SvmMulticlassModel a = fit_svm_multiclass(X, y, 5.0, KernelSpec::rbf(0.7));
    SvmMulticlassModel b = fit_svm_multiclass(X, y, 5.0, KernelSpec::rbf(0.7));
    for (int c = 0; c < kNumModes; ++c) {
      CHECK(a.per_class[c].bias == b.per_class[c].bias);
      CHECK(a.per_class[c].coefficients == b.per_class[c].coefficients);
    }
  }

  SECTION("three separated blobs are learned nearly perfectly") {
    auto [X, y] = blobs(20, 33);

    // Nearest-centroid oracle confirms the data is separable enough for the
    // 0.95 bar to be meaningful.
    double cx[3] = {0, 0, 0}, cy[3] = {0, 0, 0};
    for (std::size_t i = 0; i < X.rows; ++i) {
      cx[y[i] - 1] += X(i, 0) / 20.0;
      cy[y[i] - 1] += X(i, 1) / 20.0;
    }
    std::size_t nc_ok = 0;
    for (std::size_t i = 0; i < X.rows; ++i) {
      int best = 0;
      double bd = 1e300;
      for (int c = 0; c < 3; ++c) {
        const double d = std::hypot(X(i, 0) - cx[c], X(i, 1) - cy[c]);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (best + 1 == y[i]) ++nc_ok;
    }
    REQUIRE(static_cast<double>(nc_ok) / 60.0 >= 0.95);

    SvmMulticlassModel m = fit_svm_multiclass(X, y, 10.0, KernelSpec::rbf(0.5));
    std::size_t ok = 0;
    for (std::size_t i = 0; i < X.rows; ++i)
      if (predict_svm(m, X.row(i)).label == y[i]) ++ok;
    CHECK(static_cast<double>(ok) / 60.0 >= 0.95);
  }

  SECTION("deep interior points keep their class, by direct kernel sums") {
    auto [X, y] = blobs(15, 34);
    SvmMulticlassModel m = fit_svm_multiclass(X, y, 10.0, KernelSpec::rbf(0.5));
    const std::array<std::array<double, 2>, 3> centers = {
        {{0, 0}, {4, 0}, {0, 4}}};
    for (int c = 0; c < 3; ++c) {
      const auto pred = predict_svm(m, centers[c]);
      CHECK(pred.label == c + 1);
      // Recompute each decision value by a raw kernel sum.
      for (int k = 0; k < kNumModes; ++k) {
        const auto& bin = m.per_class[k];
        if (bin.degenerate) continue;
        double f = bin.bias;
        for (std::size_t s = 0; s < bin.support_vectors.rows; ++s)
          f += bin.coefficients[s] *
               rbf_kernel(bin.support_vectors.row(s), centers[c], 0.5);
        CHECK(pred.decision_values[k] == Catch::Approx(f).margin(1e-12));
      }
    }
  }

  SECTION("decision vector always has eight entries in class order") {
    auto [X, y] = blobs(5, 35);
    SvmMulticlassModel m = fit_svm_multiclass(X, y, 2.0, KernelSpec::rbf(0.5));
    const auto pred = predict_svm(m, X.row(0));
    CHECK(pred.decision_values.size() == 8);
    for (int c = 3; c < kNumModes; ++c)
      CHECK(pred.decision_values[c] == -1.0);  // degenerate classes
  }
}

TEST_CASE("linear weight importance") {
  SECTION("absolute weights of a hand-built model") {
    SvmMulticlassModel m;
    m.kernel = KernelSpec::linear();
    m.n_features = 3;
    m.per_class[0].weights = {0, 3, -4};
    m.per_class[0].kernel = KernelSpec::linear();
    for (int c = 1; c < kNumModes; ++c) m.per_class[c].degenerate = true;
    const auto fi = linear_weight_importance(m);
    CHECK(fi == std::vector<double>{0, 3, 4});
  }

  SECTION("duplicated feature columns earn equal importance") {
    auto [X, y] = blobs(12, 36);
    NumMatrix Xdup(X.rows, 4);
    for (std::size_t i = 0; i < X.rows; ++i) {
      Xdup(i, 0) = X(i, 0);
      Xdup(i, 1) = X(i, 1);
      Xdup(i, 2) = X(i, 0);  // duplicate of column 0
      Xdup(i, 3) = X(i, 1);  // duplicate of column 1
    }
    SvmOptions opts;
    opts.tol = 1e-6;
    SvmMulticlassModel m =
        fit_svm_multiclass(Xdup, y, 1.0, KernelSpec::linear(), opts);
    const auto fi = linear_weight_importance(m);
    CHECK(fi[0] == Catch::Approx(fi[2]).margin(1e-4));
    CHECK(fi[1] == Catch::Approx(fi[3]).margin(1e-4));
  }

  SECTION("rbf models are rejected") {
    auto [X, y] = blobs(5, 37);
    SvmMulticlassModel m = fit_svm_multiclass(X, y, 1.0, KernelSpec::rbf(0.5));
    CHECK_THROWS_AS(linear_weight_importance(m), Error);
  }
}

TEST_CASE("gamma heuristic and degenerate inputs") {
  NumMatrix X(4, 2);
  X.v = {0, 0, 1, 1, 2, 2, 3, 3};
  const double g = gamma_scale(X);
  CHECK(g > 0);
  // var of {0,0,1,1,2,2,3,3} is 1.25, p = 2.
  CHECK(g == Catch::Approx(1.0 / (2 * 1.25)));

  std::vector<int> one_class = {3, 3, 3, 3};
  CHECK_THROWS_AS(fit_svm_multiclass(X, one_class, 1.0, KernelSpec::rbf(1.0)),
                  Error);
}
