#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "modechoice/mnl.hpp"
#include "modechoice/synthetic.hpp"
#include "oracles.hpp"

using namespace modechoice;

namespace {

// Random observations with every feature at a modest scale, so a fixed
// finite-difference step of 1e-5 resolves the gradient cleanly.
Dataset random_dataset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    ChoiceObservation o;
    o.id = static_cast<std::int64_t>(i + 1);
    o.age = 16 + 44 * u(rng);
    o.gender = u(rng) < 0.5 ? 0 : 1;
    o.hh_income = 60 * u(rng);  // income expressed in thousands
    o.n_two_wheelers = static_cast<double>(static_cast<int>(3 * u(rng)));
    o.metro_avail = u(rng) < 0.5 ? 0 : 1;
    o.pop_density = 30 * u(rng);  // densities in thousands per km^2
    o.emp_density = 20 * u(rng);
    for (int m = 0; m < kNumModes; ++m) {
      o.travel_time[m] = 5 + 55 * u(rng);
      o.travel_cost[m] = 50 * u(rng);
    }
    o.chosen = ModeLabel(1 + static_cast<int>(8 * u(rng)) % 8);
    d.observations.push_back(o);
  }
  return d;
}

MnlParams random_params(const MnlSpec& spec, std::uint64_t seed,
                        double scale = 0.05) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  MnlParams p(spec.n_params());
  for (auto& v : p) v = u(rng);
  return p;
}

}  // namespace

TEST_CASE("systematic utilities follow the additive specification") {
  ChoiceObservation o;
  o.travel_time = {10, 20, 30, 40, 50, 60, 70, 80};
  o.travel_cost = {1, 2, 3, 4, 5, 6, 7, 8};
  o.chosen = ModeLabel(1);

  SECTION("all parameters zero gives zero utilities") {
    MnlSpec spec = MnlSpec::full();
    MnlParams zeros(spec.n_params(), 0.0);
    auto V = systematic_utilities(spec, zeros, o);
    for (double v : V) CHECK(v == 0.0);
  }

  SECTION("a lone travel-time coefficient") {
    MnlSpec spec;
    spec.use_travel_cost = false;
    auto V = systematic_utilities(spec, {-0.083}, o);
    CHECK(V[0] == Catch::Approx(-0.83));
    CHECK(V[7] == Catch::Approx(-0.083 * 80));
  }

  SECTION("a lone walk constant") {
    MnlSpec spec;
    spec.use_travel_time = false;
    spec.use_travel_cost = false;
    spec.terms = {{UtilityFeature::Asc, ModeLabel(8)}};
    auto V = systematic_utilities(spec, {6.652}, o);
    CHECK(V[7] == 6.652);
    for (int i = 0; i < 7; ++i) CHECK(V[i] == 0.0);
  }

  SECTION("dimension mismatch rejected") {
    MnlSpec spec = MnlSpec::full();
    CHECK_THROWS_AS(systematic_utilities(spec, {1.0}, o), Error);
  }
}

TEST_CASE("choice probabilities") {
  SECTION("equal utilities split evenly") {
    auto p = choice_probabilities({0, 0, 0, 0, 0, 0, 0, 0});
    for (double x : p) CHECK(x == Catch::Approx(0.125).margin(1e-15));
  }

  SECTION("two-alternative mask gives the analytic values") {
    const double inf = std::numeric_limits<double>::infinity();
    auto p = choice_probabilities(
        {std::log(2.0), 0, -inf, -inf, -inf, -inf, -inf, -inf});
    CHECK(p[0] == Catch::Approx(2.0 / 3));
    CHECK(p[1] == Catch::Approx(1.0 / 3));
    for (int i = 2; i < 8; ++i) CHECK(p[i] == 0.0);
  }

  SECTION("extreme utilities stay finite and match the extended oracle") {
    std::array<double, 8> V = {1000, 0, -500, 999, 3, -2, 700, 100};
    auto p = choice_probabilities(V);
    auto q = oracles::softmax_extended(V);
    double sum = 0;
    for (int i = 0; i < 8; ++i) {
      CHECK(std::isfinite(p[i]));
      CHECK(p[i] == Catch::Approx(q[i]).margin(1e-15));
      sum += p[i];
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }

  SECTION("all unavailable is an error") {
    const double inf = std::numeric_limits<double>::infinity();
    std::array<double, 8> V;
    V.fill(-inf);
    CHECK_THROWS_AS(choice_probabilities(V), Error);
  }
}

TEST_CASE("probabilities are invariant to translating all utilities") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int rep = 0; rep < 50; ++rep) {
    std::array<double, 8> V;
    for (auto& v : V) v = u(rng);
    const double c = u(rng) * 40;
    auto a = choice_probabilities(V);
    for (auto& v : V) v += c;
    auto b = choice_probabilities(V);
    for (int i = 0; i < 8; ++i)
      CHECK(std::abs(a[i] - b[i]) < 1e-12);
  }
}

TEST_CASE("log-likelihood closed forms") {
  MnlSpec spec = MnlSpec::full();
  MnlParams zeros(spec.n_params(), 0.0);

  SECTION("all-zero parameters give n*ln(1/8)") {
    Dataset d = random_dataset(100, 3);
    auto [ll, grad] = log_likelihood_and_gradient(spec, zeros, d);
    CHECK(ll == Catch::Approx(100 * std::log(1.0 / 8)).epsilon(1e-12));
    CHECK(grad.size() == static_cast<std::size_t>(spec.n_params()));
  }

  SECTION("perfect separation drives the likelihood to zero from below") {
    Dataset d = random_dataset(1, 4);
    d.observations[0].chosen = ModeLabel(2);
    MnlSpec cspec = MnlSpec::constants_only();
    MnlParams p(cspec.n_params(), 0.0);
    p[0] = 40.0;  // asc_bus
    auto [ll, grad] = log_likelihood_and_gradient(cspec, p, d);
    CHECK(ll <= 0.0);
    CHECK(ll > -1e-12);
  }

  SECTION("divergent parameters raise NonFiniteLikelihood") {
    Dataset d = random_dataset(5, 5);
    MnlParams bad(spec.n_params(), 0.0);
    bad[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(log_likelihood_and_gradient(spec, bad, d), Error);
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  // Relative error is measured against the gradient's inf-norm; per-component
  // denominators blow up on accidentally tiny components.
  MnlSpec spec = MnlSpec::full();
  for (std::uint64_t rep = 0; rep < 5; ++rep) {
    Dataset d = random_dataset(120, 100 + rep);
    MnlParams p = random_params(spec, 200 + rep);
    auto [ll, g] = log_likelihood_and_gradient(spec, p, d);
    (void)ll;
    auto fd = oracles::fd_gradient(spec, p, d, 1e-5);
    double gnorm = 0, dnorm = 0;
    for (std::size_t j = 0; j < g.size(); ++j) {
      gnorm = std::max(gnorm, std::abs(g[j]));
      dnorm = std::max(dnorm, std::abs(fd[j] - g[j]));
    }
    REQUIRE(gnorm > 0);
    CHECK(dnorm / gnorm <= 1e-6);
  }
}

TEST_CASE("analytic Hessian is symmetric and matches differenced gradients") {
  MnlSpec spec = MnlSpec::default_spec();
  Dataset d = random_dataset(150, 11);
  MnlParams p = random_params(spec, 12);
  auto H = mnl_hessian(spec, p, d);
  auto Hfd = oracles::fd_hessian(spec, p, d, 1e-5);
  const int K = spec.n_params();
  for (int a = 0; a < K; ++a)
    for (int b = 0; b < K; ++b) {
      CHECK(std::abs(H[a][b] - H[b][a]) <= 1e-8 * std::max(1.0, std::abs(H[a][b])));
      const double rel =
          std::abs(H[a][b] - Hfd[a][b]) / std::max(1.0, std::abs(H[a][b]));
      CHECK(rel <= 1e-5);
    }
}

TEST_CASE("log-likelihood is concave along random segments") {
  MnlSpec spec = MnlSpec::default_spec();
  Dataset d = random_dataset(80, 21);
  for (std::uint64_t probe = 0; probe < 100; ++probe) {
    MnlParams a = random_params(spec, 1000 + probe, 0.08);
    MnlParams b = random_params(spec, 2000 + probe, 0.08);
    MnlParams mid(a.size());
    for (std::size_t j = 0; j < a.size(); ++j) mid[j] = 0.5 * (a[j] + b[j]);
    const double lla = log_likelihood_and_gradient(spec, a, d).first;
    const double llb = log_likelihood_and_gradient(spec, b, d).first;
    const double llm = log_likelihood_and_gradient(spec, mid, d).first;
    CHECK(llm >= 0.5 * (lla + llb) - 1e-9);
  }
}

TEST_CASE("estimation recovers zero parameters within three standard errors") {
  SyntheticConfig cfg;
  cfg.n_observations = 5000;
  cfg.true_params.assign(cfg.spec.n_params(), 0.0);
  cfg.rng_seed = 31;
  Dataset d = generate_synthetic(cfg);

  MnlEstimate est = estimate_mnl(cfg.spec, d);
  REQUIRE(est.converged);
  REQUIRE(est.std_errors_available);
  for (std::size_t j = 0; j < est.params.size(); ++j)
    CHECK(std::abs(est.params[j]) <= 3.0 * est.std_errors[j]);
}

TEST_CASE("estimation recovers planted parameters on a large sample") {
  SyntheticConfig cfg;
  cfg.n_observations = 20000;
  cfg.true_params = default_true_params();
  cfg.rng_seed = 77;
  Dataset d = generate_synthetic(cfg);

  MnlEstimate est = estimate_mnl(cfg.spec, d);
  REQUIRE(est.converged);
  REQUIRE(est.std_errors_available);

  double sq = 0, mean_se = 0;
  for (std::size_t j = 0; j < est.params.size(); ++j) {
    const double err = est.params[j] - cfg.true_params[j];
    sq += err * err;
    mean_se += est.std_errors[j];
  }
  const double rmse = std::sqrt(sq / static_cast<double>(est.params.size()));
  mean_se /= static_cast<double>(est.params.size());
  CHECK(rmse <= 3.0 * mean_se);
}

TEST_CASE("constants-only estimation reproduces the share model exactly") {
  SyntheticConfig cfg;
  cfg.n_observations = 3000;
  cfg.true_params = default_true_params();
  cfg.rng_seed = 5;
  Dataset d = generate_synthetic(cfg);

  MnlEstimate est = estimate_mnl(MnlSpec::constants_only(), d);
  REQUIRE(est.converged);
  CHECK(std::abs(est.rho2) <= 1e-8);
  CHECK(est.ll_final >= est.ll_constants_only - 1e-6);
}

TEST_CASE("estimation is deterministic") {
  SyntheticConfig cfg;
  cfg.n_observations = 1500;
  cfg.true_params = default_true_params();
  cfg.rng_seed = 9;
  Dataset d = generate_synthetic(cfg);

  MnlEstimate a = estimate_mnl(cfg.spec, d);
  MnlEstimate b = estimate_mnl(cfg.spec, d);
  CHECK(a.params == b.params);
  CHECK(a.std_errors == b.std_errors);
  CHECK(a.ll_final == b.ll_final);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("t statistics are the estimate over its standard error") {
  SyntheticConfig cfg;
  cfg.n_observations = 2000;
  cfg.true_params = default_true_params();
  cfg.rng_seed = 13;
  Dataset d = generate_synthetic(cfg);
  MnlEstimate est = estimate_mnl(cfg.spec, d);
  REQUIRE(est.std_errors_available);
  for (std::size_t j = 0; j < est.params.size(); ++j)
    if (est.std_errors[j] > 0)
      CHECK(est.t_stats[j] ==
            Catch::Approx(est.params[j] / est.std_errors[j]));
  CHECK(est.ll_final >= est.ll_constants_only);
  CHECK(est.rho2 > 0);
  CHECK(est.rho2 < 1);
  CHECK(est.adj_rho2 < est.rho2);
}

TEST_CASE("prediction semantics") {
  Dataset d = random_dataset(50, 33);
  MnlSpec spec = MnlSpec::default_spec();

  SECTION("all-zero parameters predict the lowest code on ties") {
    MnlParams zeros(spec.n_params(), 0.0);
    auto pred = predict_mnl(spec, zeros, d);
    for (auto label : pred.labels) CHECK(label == 1);
  }

  SECTION("probability rows are normalized") {
    MnlParams p = random_params(spec, 34);
    auto pred = predict_mnl(spec, p, d);
    for (std::size_t r = 0; r < d.n(); ++r) {
      double sum = 0;
      for (int c = 0; c < kNumModes; ++c) sum += pred.probabilities(r, c);
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }

  SECTION("a dominant walk constant predicts walk everywhere") {
    MnlSpec aspec = MnlSpec::constants_only();
    MnlParams p(aspec.n_params(), 0.0);
    p.back() = 60.0;  // asc_walk
    auto pred = predict_mnl(aspec, p, d);
    for (auto label : pred.labels) CHECK(label == 8);
  }

  SECTION("labels are invariant to rescaling a feature and its coefficient") {
    MnlParams p = random_params(spec, 35, 0.08);
    auto base = predict_mnl(spec, p, d);

    const double k = 12.5;
    Dataset scaled = d;
    for (auto& o : scaled.observations)
      for (int m = 0; m < kNumModes; ++m) o.travel_time[m] *= k;
    MnlParams q = p;
    q[spec.tt_slot()] /= k;
    auto moved = predict_mnl(spec, q, scaled);
    CHECK(moved.labels == base.labels);
  }
}

TEST_CASE("availability masks restrict the choice set") {
  Dataset d = random_dataset(20, 41);
  MnlSpec spec = MnlSpec::constants_only();
  spec.availability.assign(d.n(), kAllAvailable);
  for (auto& m : spec.availability) m[7] = 0;  // walk never available
  MnlParams p(spec.n_params(), 0.0);
  p.back() = 9.0;  // asc_walk, irrelevant when masked
  auto pred = predict_mnl(spec, p, d);
  for (std::size_t r = 0; r < d.n(); ++r) CHECK(pred.probabilities(r, 7) == 0.0);

  // A chosen-but-unavailable alternative signals a divergent likelihood.
  bool any_walk = false;
  for (auto& o : d.observations)
    if (o.chosen.code() == 8) any_walk = true;
  if (any_walk)
    CHECK_THROWS_AS(log_likelihood_and_gradient(spec, p, d), Error);
}

TEST_CASE("quasi-separation is flagged when a class with a free ASC is absent") {
  Dataset d = random_dataset(60, 55);
  for (auto& o : d.observations)
    if (o.chosen.code() == 3) o.chosen = ModeLabel(2);
  MnlEstimate est = estimate_mnl(MnlSpec::constants_only(), d,
                                 {.max_iter = 80, .grad_tol = 1e-6});
  CHECK(est.quasi_separation);
}
