#include <doctest.h>

#include <cmath>
#include <limits>

#include "mbpre/growth.hpp"
#include "oracles.hpp"

using namespace mbpre;

namespace {

FitnessLandscape two_by_two() {
  Matrix m(2, 2);
  m << 1.5, 0.6, 0.6, 1.5;
  return FitnessLandscape(m);
}

Matrix stochastic(Rng& rng, Index q) {
  Matrix k(q, q);
  for (Index i = 0; i < q; ++i) {
    for (Index j = 0; j < q; ++j) k(i, j) = 0.05 + rng.uniform();
    k.row(i) /= k.row(i).sum();
  }
  return k;
}

}  // namespace

TEST_CASE("growth rate of the symmetric example") {
  const auto m = two_by_two();
  const auto env = FiniteEnv::iid(Vector::Constant(2, 0.5));
  Vector half = Vector::Constant(2, 0.5);
  CHECK(gamma_no_sensing(half, m, env).rate == doctest::Approx(std::log(1.05)).epsilon(1e-14));
  CHECK(growth_rate(Vector::Unit(2, 0), m, env.marginal()) ==
        doctest::Approx(0.5 * (std::log(1.5) + std::log(0.6))).epsilon(1e-14));
}

TEST_CASE("a zero mean with positive weight gives -infinity") {
  Matrix m(2, 2);
  m << 1.0, 0.0, 2.0, 0.0;
  Vector w(2);
  w << 0.5, 0.5;
  Vector p(2);
  p << 0.5, 0.5;
  CHECK(growth_rate(p, FitnessLandscape(m), w) == -std::numeric_limits<double>::infinity());
  w << 1.0, 0.0;
  CHECK(std::isfinite(growth_rate(p, FitnessLandscape(m), w)));
}

TEST_CASE("simplex gradient matches finite differences along vertex directions") {
  Rng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const Index q = 2 + rep % 3, d = 1 + rep % 4;
    Matrix mean = Matrix::Random(q, d).array().abs() + 0.1;
    const FitnessLandscape m(mean);
    Vector w = Vector::Random(d).array().abs() + 0.1;
    w /= w.sum();
    Vector p = Vector::Random(q).array().abs() + 0.1;
    p /= p.sum();
    const Vector g = simplex_gradient(p, m, w);
    const double h = 1e-6;
    for (Index t = 0; t < q; ++t) {
      const Vector dir = Vector::Unit(q, t) - p;
      const double fd = (growth_rate(p + h * dir, m, w) - growth_rate(p - h * dir, m, w)) / (2 * h);
      CHECK(g[t] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
  (void)rng;
}

TEST_CASE("sensing rate uses the pair law") {
  const auto m = two_by_two();
  const auto env = FiniteEnv::two_state_markov(0.2, 0.2);
  Matrix respond = Matrix::Identity(2, 2);
  // Matching the current state: right with probability 0.8.
  const double expected = 0.8 * std::log(1.5) + 0.2 * std::log(0.6);
  CHECK(gamma_sensing(respond, m, env).rate == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("gaussian no-sensing and sensing rates match quadrature") {
  const GaussianLandscape landscape{3.0, 1.0};
  const GaussianAR1Env env(0.5, 2.0, 0.7);
  const GaussianStrategy p{0.2, 0.4};
  const double direct = oracle::simpson(
      [&](double e) { return oracle::normal_pdf(e, 0.5, 2.0) * std::log(mixed_mean(p, landscape, e)); }, -15, 16, 4000);
  CHECK(gamma_no_sensing(p, landscape, env).rate == doctest::Approx(direct).epsilon(1e-9));

  const GaussianSensingStrategy pbar{0.6, 0.1, 0.3};
  // E over (e1, e2): e2 | e1 ~ N(mu + rho (e1 - mu), s2 (1 - rho^2)).
  const double sensing = oracle::simpson(
      [&](double e1) {
        const auto cond = env.conditional(e1);
        const double inner = oracle::simpson(
            [&](double e2) {
              return oracle::normal_pdf(e2, cond.mean, cond.variance) * std::log(mixed_mean(pbar.at(e1), landscape, e2));
            },
            cond.mean - 12, cond.mean + 12, 800);
        return oracle::normal_pdf(e1, 0.5, 2.0) * inner;
      },
      -12, 13, 800);
  CHECK(gamma_sensing(pbar, landscape, env).rate == doctest::Approx(sensing).epsilon(1e-7));
}

TEST_CASE("classification thresholds and moment condition") {
  CHECK(classify(0.1) == Regime::Supercritical);
  CHECK(classify(-0.1) == Regime::Subcritical);
  CHECK(classify(1e-12) == Regime::Critical);
  const auto m = two_by_two();
  const auto env = FiniteEnv::iid(Vector::Constant(2, 0.5));
  const auto c = classify(std::log(1.05), Vector::Constant(2, 0.5), m, env, OffspringFamily::Poisson);
  CHECK(c.regime == Regime::Supercritical);
  CHECK(c.moment_condition);
}

TEST_CASE("ergodic estimate agrees with the exact rate") {
  const auto m = two_by_two();
  const auto env = FiniteEnv::two_state_markov(0.3, 0.3);
  Vector p(2);
  p << 0.7, 0.3;
  const auto exact = gamma_no_sensing(p, m, env).rate;
  const auto est = gamma_ergodic_mc(Strategy::no_sensing(p), m, env, 200000, 5);
  CHECK(est.method == GrowthMethod::ErgodicMC);
  CHECK(std::abs(est.rate - exact) < 4 * est.std_error + 1e-12);
}

TEST_CASE("hereditary estimators agree with brute-force enumeration") {
  Rng rng(8);
  for (int rep = 0; rep < 5; ++rep) {
    const Index q = 2 + rep % 2, d = 2;
    Matrix mean = (Matrix::Random(q, d).array().abs() * 2.0 + 0.1).matrix();
    const FitnessLandscape m(mean);
    TraitKernel kernel{stochastic(rng, q), stochastic(rng, q)};
    Vector pi0 = Vector::Constant(q, 1.0 / q);
    const Index n = 3;
    FinitePath omega{{0, 1, 1}, 0};
    const auto brute = oracle::enumerate(kernel, pi0, mean, omega.values, static_cast<int>(n));
    const double truth = std::log(brute.mean_weight) / n;

    const auto exact = gamma_hereditary_enumerated(kernel, pi0, m, omega, n);
    CHECK(exact.rate == doctest::Approx(truth).epsilon(1e-12));
    CHECK(gamma_jensen_bound(kernel, pi0, m, omega, n) <= truth + 1e-12);

    const auto mc = gamma_hereditary(kernel, pi0, m, omega, n, 50000, 3 + rep, 1);
    CHECK(std::abs(mc.rate - truth) < 4 * mc.std_error);

    ReferenceKernel ref{{Matrix::Constant(q, q, 1.0 / q), Matrix::Constant(q, q, 1.0 / q)}};
    const auto is = gamma_importance_sampled(kernel, ref, pi0, m, omega, n, 50000, 7 + rep, 1);
    CHECK(std::abs(is.rate - truth) < 4 * is.std_error);
  }
}

TEST_CASE("monte carlo results do not depend on thread count") {
  Rng rng(2);
  TraitKernel kernel{stochastic(rng, 2)};
  Matrix mean(2, 1);
  mean << 1.2, 0.7;
  FinitePath omega{{0, 0, 0, 0}, 0};
  const auto a = gamma_hereditary(kernel, Vector::Constant(2, 0.5), FitnessLandscape(mean), omega, 4, 30000, 9, 1);
  const auto b = gamma_hereditary(kernel, Vector::Constant(2, 0.5), FitnessLandscape(mean), omega, 4, 30000, 9, 4);
  CHECK(a.rate == b.rate);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("importance sampling rejects references missing support") {
  TraitKernel kernel{Matrix::Constant(2, 2, 0.5)};
  Matrix singular(2, 2);
  singular << 1.0, 0.0, 1.0, 0.0;
  CHECK_THROWS_AS(kernel_density(kernel, ReferenceKernel{{singular}}), std::domain_error);
}

TEST_CASE("enumeration refuses oversized path spaces") {
  const Index q = 10;
  TraitKernel kernel{Matrix::Constant(q, q, 1.0 / q)};
  FinitePath omega{std::vector<Index>(8, 0), 0};
  const FitnessLandscape m(Matrix::Ones(q, 1));
  CHECK_THROWS_AS(gamma_hereditary_enumerated(kernel, Vector::Constant(q, 1.0 / q), m, omega, 8), std::domain_error);
}
