#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mbpre/growth.hpp"
#include "mbpre/optimize.hpp"
#include "oracles.hpp"

using namespace mbpre;

namespace {

FitnessLandscape two_by_two() {
  Matrix m(2, 2);
  m << 1.5, 0.6, 0.6, 1.5;
  return FitnessLandscape(m);
}

}  // namespace

TEST_CASE("symmetric example has the uniform optimum") {
  const auto env = FiniteEnv::iid(Vector::Constant(2, 0.5));
  const auto r = optimize_no_sensing(two_by_two(), env);
  CHECK(r.converged);
  CHECK(r.distribution()[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r.rate == doctest::Approx(std::log(1.05)).epsilon(1e-12));
  CHECK(r.certificate_gap <= 1e-8);
  CHECK(r.support.size() == 2);
  CHECK_FALSE(r.non_unique);
}

TEST_CASE("closed form agrees with the iterative solver") {
  Rng rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    Matrix mean = Matrix::Random(2, 2).array().abs() * 2.0 + 0.05;
    const FitnessLandscape m(mean);
    Vector w(2);
    w[0] = 0.05 + 0.9 * rng.uniform();
    w[1] = 1.0 - w[0];
    const auto closed = optimize_2x2_closed_form(m, w);
    const auto iter = optimize_no_sensing(m, w);
    CHECK(closed.rate == doctest::Approx(iter.rate).epsilon(1e-9));
    CHECK(closed.certificate_gap <= 1e-8);
  }
}

TEST_CASE("interior 2x2 weights for the sensing conditionals") {
  // Conditional law (1 - q, q): the interior optimum puts (5 - 7q) / 3 on t1.
  for (double q : {0.3, 0.4, 0.5, 0.6, 0.7}) {
    Vector w(2);
    w << 1.0 - q, q;
    const auto r = optimize_2x2_closed_form(two_by_two(), w);
    CHECK(r.method == SolveMethod::ClosedForm);
    CHECK(r.distribution()[0] == doctest::Approx((5 - 7 * q) / 3).epsilon(1e-12));
  }
}

TEST_CASE("solver matches a grid search oracle") {
  Rng rng(12);
  for (int rep = 0; rep < 30; ++rep) {
    const Index q = 2 + rep % 2, d = 2 + rep % 3;
    Matrix mean(q, d);
    for (Index i = 0; i < q; ++i)
      for (Index j = 0; j < d; ++j) mean(i, j) = 0.1 + 2.0 * rng.uniform();
    Vector w(d);
    for (Index j = 0; j < d; ++j) w[j] = 0.1 + rng.uniform();
    w /= w.sum();
    const auto r = optimize_no_sensing(FitnessLandscape(mean), w);
    const double grid = oracle::grid_search(mean, w, 1e-3);
    CHECK(r.converged);
    // Concavity bounds the suboptimality by the certificate gap.
    CHECK(r.rate >= grid - std::max(r.certificate_gap, 0.0) - 1e-12);
    CHECK(r.rate - grid <= 1e-3);
    CHECK(certificate_gap(r.distribution(), FitnessLandscape(mean), w) <= 1e-8);
  }
}

TEST_CASE("dominated traits are left out of the support") {
  Matrix mean(3, 2);
  mean << 2.0, 0.5, 0.5, 2.0, 0.4, 0.4;
  Vector w = Vector::Constant(2, 0.5);
  const auto r = optimize_no_sensing(FitnessLandscape(mean), w);
  CHECK(r.distribution()[2] < 1e-6);
  CHECK(r.support.size() == 2);
}

TEST_CASE("single trait gives a Dirac with zero gap") {
  Matrix mean(1, 3);
  mean << 1.0, 2.0, 0.5;
  const auto r = optimize_no_sensing(FitnessLandscape(mean), Vector::Constant(3, 1.0 / 3));
  CHECK(r.distribution()[0] == 1.0);
  CHECK(r.certificate_gap == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("identical traits are flagged as non-unique") {
  Matrix mean(2, 2);
  mean << 1.0, 2.0, 1.0, 2.0;
  const auto r = optimize_no_sensing(FitnessLandscape(mean), Vector::Constant(2, 0.5));
  CHECK(r.non_unique);
}

TEST_CASE("an all-zero column with positive weight is rejected") {
  Matrix mean(2, 2);
  mean << 1.0, 0.0, 2.0, 0.0;
  CHECK_THROWS_AS(optimize_no_sensing(FitnessLandscape(mean), Vector::Constant(2, 0.5)), std::domain_error);
}

TEST_CASE("pure optimality test") {
  Matrix mean(2, 2);
  mean << 3.0, 2.0, 1.0, 1.0;
  CHECK(pure_optimal(0, FitnessLandscape(mean), Vector::Constant(2, 0.5)));
  CHECK_FALSE(pure_optimal(1, FitnessLandscape(mean), Vector::Constant(2, 0.5)));
}

TEST_CASE("sensing regimes in the two-state chain") {
  const auto m = two_by_two();
  // Low q: responsive switching.
  auto r = optimize_sensing(m, FiniteEnv::two_state_markov(0.2, 0.2));
  CHECK(r.by_state()(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.by_state()(1, 1) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.rate == doctest::Approx(0.8 * std::log(1.5) + 0.2 * std::log(0.6)).epsilon(1e-9));
  // High q: anticipate the switch.
  r = optimize_sensing(m, FiniteEnv::two_state_markov(0.8, 0.8));
  CHECK(r.by_state()(1, 0) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.per_state.size() == 2);
  // Sensing never loses to no sensing.
  const auto none = optimize_no_sensing(m, FiniteEnv::two_state_markov(0.8, 0.8));
  CHECK(r.rate >= none.rate - 1e-12);
}

TEST_CASE("survival queries") {
  const auto m = two_by_two();
  const auto env = FiniteEnv::iid(Vector::Constant(2, 0.5));
  const auto q = survival_query(Vector::Constant(2, 0.5), m, env);
  CHECK(q.in_survival_set);
  CHECK(q.polymorphism_required);
  const auto pure = survival_query(Vector::Unit(2, 0), m, env);
  CHECK_FALSE(pure.in_survival_set);
  Matrix k = Matrix::Identity(2, 2);
  CHECK_THROWS_AS(survival_query(Strategy::hereditary({k, k}, Vector::Constant(2, 0.5)), m, env),
                  std::invalid_argument);
}

TEST_CASE("non-converged runs report the best iterate") {
  Matrix mean(3, 3);
  mean << 1.0, 2.5, 0.3, 0.4, 1.0, 2.0, 2.0, 0.2, 1.3;
  SolverOptions opts;
  opts.max_iter = 1;
  opts.tol = 1e-15;
  const auto r = optimize_no_sensing(FitnessLandscape(mean), Vector::Constant(3, 1.0 / 3), opts);
  CHECK_FALSE(r.converged);
  CHECK(std::isfinite(r.rate));
}
