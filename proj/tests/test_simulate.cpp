#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mbpre/simulate.hpp"

using namespace mbpre;

namespace {

FitnessLandscape two_by_two() {
  Matrix m(2, 2);
  m << 1.5, 0.6, 0.6, 1.5;
  return FitnessLandscape(m);
}

}  // namespace

TEST_CASE("initial population sums to the root count") {
  Rng rng(1);
  const auto s = initial_population(Strategy::no_sensing(Vector::Constant(3, 1.0 / 3)), 1000, rng);
  CHECK(s.total == 1000);
  CHECK(std::accumulate(s.counts.begin(), s.counts.end(), std::int64_t{0}) == 1000);
  CHECK(s.log_size() == doctest::Approx(std::log(1000.0)));
}

TEST_CASE("quenched mean size matches the product of mixed means") {
  const auto m = two_by_two();
  Vector p(2);
  p << 0.3, 0.7;
  const auto strategy = Strategy::no_sensing(p);
  const FinitePath path{{0, 1, 1, 0, 1}, 0};
  SimulationOptions opts;
  opts.generations = 5;
  opts.roots = 10;
  const auto runs = run_replicates_on_path(strategy, OffspringFamily::Poisson, m, path, opts, 4000, 77, 2);
  MeanAccumulator size;
  for (const auto& r : runs) size.add(static_cast<double>(r.at(5).total));
  double expected = 10.0;
  for (Index k = 0; k < 5; ++k) expected *= p.dot(m.mean().col(path[k]));
  CHECK(expected_population(strategy, m, path, 10, 5) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(size.mean() - expected) < 4 * size.standard_error());
}

TEST_CASE("replicates are independent of thread count") {
  const auto m = two_by_two();
  const auto env = FiniteEnv::iid(Vector::Constant(2, 0.5));
  SimulationOptions opts;
  opts.generations = 20;
  const auto strategy = Strategy::no_sensing(Vector::Constant(2, 0.5));
  const auto a = run_replicates(strategy, OffspringFamily::Geometric, m, env, opts, 30, 5, 1);
  const auto b = run_replicates(strategy, OffspringFamily::Geometric, m, env, opts, 30, 5, 3);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].env_path.values == b[i].env_path.values);
    CHECK(a[i].final_state().counts == b[i].final_state().counts);
    CHECK(a[i].extinct_at == b[i].extinct_at);
  }
}

TEST_CASE("extinct runs stop and report zero afterwards") {
  Matrix mean(1, 1);
  mean << 0.2;
  SimulationOptions opts;
  opts.generations = 200;
  const auto r = run(Strategy::no_sensing(Vector::Ones(1)), OffspringFamily::Poisson, FitnessLandscape(mean),
                     FiniteEnv::iid(Vector::Ones(1)), opts, 3);
  REQUIRE(r.extinct_at.has_value());
  CHECK(r.final_state().total == 0);
  CHECK(r.at(150).total == 0);
  CHECK(r.at(150).log_size() == -INFINITY);
}

TEST_CASE("thinning keeps the population near the cap and tracks the scale") {
  Matrix mean(1, 1);
  mean << 3.0;
  SimulationOptions opts;
  opts.generations = 15;
  opts.roots = 10;
  opts.cap = 10000;
  const auto r = run(Strategy::no_sensing(Vector::Ones(1)), OffspringFamily::Poisson, FitnessLandscape(mean),
                     FiniteEnv::iid(Vector::Ones(1)), opts, 8);
  CHECK(r.capped);
  CHECK(r.final_state().total < 11000);
  // log |Z_n| grows like n log 3 from log 10.
  CHECK(r.final_state().log_size() == doctest::Approx(std::log(10.0) + 15 * std::log(3.0)).epsilon(0.01));
}

TEST_CASE("sensing children follow the current state") {
  const auto m = two_by_two();
  Matrix by_state = Matrix::Identity(2, 2);
  const auto strategy = Strategy::sensing(by_state, Vector::Constant(2, 0.5));
  Rng rng(3);
  auto state = initial_population(strategy, 100, rng);
  state = step(state, strategy, OffspringFamily::Poisson, m, 1, rng);
  CHECK(state.counts[0] == 0);
  CHECK(state.counts[1] == state.total);
}

TEST_CASE("lineages trace back through recorded parents") {
  const auto m = two_by_two();
  SimulationOptions opts;
  opts.generations = 6;
  opts.roots = 50;
  opts.record_genealogy = true;
  const auto strategy = Strategy::no_sensing(Vector::Constant(2, 0.5));
  const auto r = run(strategy, OffspringFamily::Poisson, m, FiniteEnv::iid(Vector::Constant(2, 0.5)), opts, 21);
  REQUIRE_FALSE(r.extinct_at.has_value());
  REQUIRE(r.genealogy.has_value());
  Rng rng(2);
  const auto lineage = sample_lineage(r, rng);
  REQUIRE(lineage.has_value());
  CHECK(lineage->traits.size() == 7);
  const auto marginals = lineage_marginals(r, 2);
  REQUIRE(marginals.has_value());
  for (const auto& v : *marginals) CHECK(v.sum() == doctest::Approx(1.0).epsilon(1e-12));
  // The last marginal is the trait composition of generation n.
  const auto& last = r.final_state();
  CHECK((*marginals)[6][1] == doctest::Approx(double(last.counts[1]) / last.total));

  SimulationOptions plain = opts;
  plain.record_genealogy = false;
  const auto bare = run(strategy, OffspringFamily::Poisson, m, FiniteEnv::iid(Vector::Constant(2, 0.5)), plain, 21);
  CHECK_THROWS_AS(sample_lineage(bare, rng), std::logic_error);
}

TEST_CASE("composition given size passes for no-sensing runs") {
  const auto m = two_by_two();
  Vector p(2);
  p << 0.35, 0.65;
  const auto strategy = Strategy::no_sensing(p);
  SimulationOptions opts;
  opts.generations = 6;
  opts.roots = 5;
  const auto runs =
      run_replicates(strategy, OffspringFamily::Poisson, m, FiniteEnv::iid(Vector::Constant(2, 0.5)), opts, 500, 4, 2);
  const auto report = composition_given_size(runs, strategy, 6, 99);
  CHECK_FALSE(report.inconclusive);
  CHECK(report.passed);
  CHECK(report.dof == 9);
}

TEST_CASE("composition test detects a wrong strategy") {
  const auto m = two_by_two();
  Vector p(2), wrong(2);
  p << 0.2, 0.8;
  wrong << 0.5, 0.5;
  SimulationOptions opts;
  opts.generations = 6;
  opts.roots = 5;
  const auto runs = run_replicates(Strategy::no_sensing(p), OffspringFamily::Poisson, m,
                                   FiniteEnv::iid(Vector::Constant(2, 0.5)), opts, 500, 4, 2);
  const auto report = composition_given_size(runs, Strategy::no_sensing(wrong), 6, 99);
  CHECK_FALSE(report.passed);
}
