// Acceptance suite: one PASS/FAIL line per criterion. Reference values come
// from closed forms written out here, brute-force enumeration, grid search
// and independent Monte Carlo (tests/oracles.hpp); none reuse library code
// paths for the quantity under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mbpre/gaussian.hpp"
#include "mbpre/genealogy.hpp"
#include "mbpre/growth.hpp"
#include "mbpre/optimize.hpp"
#include "mbpre/simulate.hpp"
#include "oracles.hpp"

using namespace mbpre;

namespace {

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail << " [failed: " << what << "]";
    }
  }
};

FitnessLandscape symmetric() {
  Matrix m(2, 2);
  m << 1.5, 0.6, 0.6, 1.5;
  return FitnessLandscape(m);
}

double uniform_in(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

Vector random_simplex(Rng& rng, Index size, double floor = 0.0) {
  Vector v(size);
  for (Index i = 0; i < size; ++i) v[i] = floor - std::log(1.0 - rng.uniform());
  return v / v.sum();
}

Matrix random_stochastic(Rng& rng, Index q) {
  Matrix k(q, q);
  for (Index i = 0; i < q; ++i) k.row(i) = random_simplex(rng, q, 0.05).transpose();
  return k;
}

// ---------------------------------------------------------------------------

Outcome criterion1() {
  Outcome o;
  const auto m = symmetric();
  const auto env = FiniteEnv::iid(Vector::Constant(2, 0.5));
  const auto r = optimize_no_sensing(m, env);
  const auto& p = r.distribution();
  const double pure = 0.5 * (std::log(1.5) + std::log(0.6));
  const auto query = survival_query(p, m, env);
  o.require(r.converged, "converged");
  o.require(std::abs(p[0] - 0.5) <= 1e-6 && std::abs(p[1] - 0.5) <= 1e-6, "p* = (0.5, 0.5)");
  o.require(std::abs(r.rate - std::log(1.05)) <= 1e-9, "gamma* = log 1.05");
  for (Index t = 0; t < 2; ++t) {
    o.require(std::abs(growth_rate(Vector::Unit(2, t), m, env.marginal()) - pure) <= 1e-12, "pure rate");
  }
  o.require(query.polymorphism_required, "polymorphism required");
  o.detail << "p*=(" << p[0] << ", " << p[1] << ") gamma*=" << r.rate << " |gamma*-log1.05|="
           << std::abs(r.rate - std::log(1.05));
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto m = symmetric();
  const double lo = 2.0 / 7.0, hi = 5.0 / 7.0;
  // gamma** on each branch for the chain switching with probability q.
  const auto responsive = [](double q) { return (1 - q) * std::log(1.5) + q * std::log(0.6); };
  const auto interior = [](double q) { return std::log(2.1) + (1 - q) * std::log(1 - q) + q * std::log(q); };
  const auto anticipating = [](double q) { return std::log(0.6) - q * std::log(0.4); };
  const auto reference = [&](double q) { return q < lo ? responsive(q) : q <= hi ? interior(q) : anticipating(q); };

  double worst_weight = 0.0, worst_rate = 0.0;
  for (double q : {0.1, 0.25, lo, 0.4, 0.5, 0.6, hi, 0.75, 0.9}) {
    const auto r = optimize_sensing(m, FiniteEnv::two_state_markov(q, q));
    const Matrix& by = r.by_state();
    const double stay = by(0, 0);  // mass on t1 after e1, equal to mass on t2 after e2
    o.require(std::abs(by(1, 1) - stay) <= 1e-6, "symmetric per-state laws");
    double expected_stay = q < lo ? 1.0 : q > hi ? 0.0 : (5 - 7 * q) / 3;
    worst_weight = std::max(worst_weight, std::abs(stay - expected_stay));
    if (q >= lo && q <= hi) {
      worst_weight = std::max(worst_weight, std::abs(by(1, 0) - (7 * q - 2) / 3));
    }
    worst_rate = std::max(worst_rate, std::abs(r.rate - reference(q)));
  }
  o.require(worst_weight <= 1e-6, "regime weights within 1e-6");
  o.require(worst_rate <= 1e-9, "gamma** matches branch formulas");

  const auto at_half = optimize_sensing(m, FiniteEnv::two_state_markov(0.5, 0.5)).rate;
  const auto none = optimize_no_sensing(m, FiniteEnv::iid(Vector::Constant(2, 0.5))).rate;
  o.require(std::abs(at_half - none) <= 1e-9, "gamma**(1/2) = gamma*");

  double jump = 0.0;
  for (double edge : {lo, hi}) {
    const double below = optimize_sensing(m, FiniteEnv::two_state_markov(edge - 1e-12, edge - 1e-12)).rate;
    const double above = optimize_sensing(m, FiniteEnv::two_state_markov(edge + 1e-12, edge + 1e-12)).rate;
    jump = std::max(jump, std::abs(below - above));
  }
  jump = std::max({jump, std::abs(responsive(lo) - interior(lo)), std::abs(interior(hi) - anticipating(hi))});
  o.require(jump <= 1e-9, "continuity at 2/7 and 5/7");

  const double limit = optimize_sensing(m, FiniteEnv::two_state_markov(0.999, 0.999)).rate;
  o.require(std::abs(limit - std::log(1.5)) <= 1e-2, "gamma**(0.999) near log 3/2");
  o.detail << "max weight err=" << worst_weight << " max rate err=" << worst_rate << " threshold jump=" << jump
           << " gamma**(0.999)=" << limit;
  return o;
}

Outcome criterion3() {
  Outcome o;
  const GaussianLandscape landscape{1.0, 1.0};
  const double mean = 0.4;
  double worst_gap = -1.0, worst_grid = 0.0;
  for (double chi : {0.5, 2.0, 8.0}) {
    // The grid solve of gamma* depends only on the marginal variance.
    const Normal marginal{mean, chi * landscape.width_sq};
    const auto plain = gaussian_optimal_for(landscape, marginal);
    const auto grid_problem = discretize(landscape, marginal, default_trait_grid(landscape, marginal, 0.01));
    const double grid_rate = optimize_no_sensing(grid_problem.landscape, grid_problem.weights).rate;
    worst_grid = std::max(worst_grid, std::abs(grid_rate - plain.rate));

    for (double rho : {0.2, 0.6, 0.95}) {
      const GaussianProblem problem{landscape, GaussianAR1Env(mean, marginal.variance, rho)};
      const auto none = gaussian_optimal_no_sensing(problem);
      const auto sensing = gaussian_optimal_sensing(problem);
      const double half = 6.0 * std::sqrt(std::max(landscape.width_sq, marginal.variance));
      for (int i = 0; i < 1000; ++i) {
        const double t = mean - half + 2.0 * half * i / 999.0;
        worst_gap = std::max(worst_gap, gaussian_certificate(t, none.strategy, landscape, marginal) - 1.0);
        // Sensing: certificate against the conditional law for a spread of parent states.
        for (double e1 : {mean - 2.0, mean, mean + 3.0}) {
          const auto cond = problem.env.conditional(e1);
          worst_gap = std::max(worst_gap, gaussian_certificate(t + cond.mean - mean, sensing.strategy.at(e1),
                                                               landscape, cond) - 1.0);
        }
      }
      // gamma** as the optimum of one conditional problem on a grid.
      const Normal cond = problem.env.conditional(mean);
      const auto cond_grid = discretize(landscape, cond, default_trait_grid(landscape, cond, 0.01));
      const double grid_sensing = optimize_no_sensing(cond_grid.landscape, cond_grid.weights).rate;
      worst_grid = std::max(worst_grid, std::abs(grid_sensing - sensing.rate));
    }
  }
  o.require(worst_gap <= 1e-6, "certificate gap <= 1e-6");
  o.require(worst_grid <= 1e-3, "grid solver within 1e-3");
  o.detail << "max certificate gap=" << worst_gap << " max |grid - closed form|=" << worst_grid;
  return o;
}

Outcome criterion4() {
  Outcome o;
  Rng rng(404);
  int converged = 0, gridded = 0;
  double worst_gap = 0.0, worst_pure = 0.0, worst_grid = 0.0;
  std::size_t worst_support = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const Index q = 1 + static_cast<Index>(rng() % 5), d = 1 + static_cast<Index>(rng() % 5);
    Matrix mean(q, d);
    for (Index t = 0; t < q; ++t)
      for (Index e = 0; e < d; ++e) mean(t, e) = uniform_in(rng, 0.05, 3.0);
    const Vector w = random_simplex(rng, d);
    const FitnessLandscape m(mean);
    const auto r = optimize_no_sensing(m, w);
    if (!r.converged) continue;
    ++converged;
    worst_gap = std::max(worst_gap, r.certificate_gap);
    double best_pure = -INFINITY;
    for (Index t = 0; t < q; ++t) best_pure = std::max(best_pure, oracle::rate(Vector::Unit(q, t), mean, w));
    worst_pure = std::max(worst_pure, best_pure - r.rate);
    worst_support = std::max(worst_support, r.support.size());
    o.require(r.support.size() <= static_cast<std::size_t>(d), "support size <= environments");
    if (q <= 3) {
      ++gridded;
      worst_grid = std::max(worst_grid, std::abs(r.rate - oracle::grid_search(mean, w, 1e-3)));
    }
  }
  o.require(worst_gap <= 1e-8, "certificate gap <= 1e-8");
  o.require(worst_pure <= 1e-8, "rate >= best pure - 1e-8");
  o.require(worst_grid <= 1e-3, "grid search within 1e-3");
  o.detail << converged << "/200 converged; max gap=" << worst_gap << " max(pure - rate)=" << worst_pure
           << " grid instances=" << gridded << " max |rate - grid|=" << worst_grid;
  return o;
}

Outcome criterion5() {
  Outcome o;
  Rng rng(505);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const Index q = 1 + static_cast<Index>(rng() % 5), d = 1 + static_cast<Index>(rng() % 5);
    Matrix mean(q, d);
    for (Index t = 0; t < q; ++t)
      for (Index e = 0; e < d; ++e) mean(t, e) = uniform_in(rng, 0.05, 3.0);
    const auto env = FiniteEnv::iid(random_simplex(rng, d));
    const FitnessLandscape m(mean);
    const double sensing = optimize_sensing(m, env).rate;
    const double none = optimize_no_sensing(m, env).rate;
    worst = std::max(worst, std::abs(sensing - none));
  }
  o.require(worst <= 1e-8, "|gamma** - gamma*| <= 1e-8");
  o.detail << "max |gamma** - gamma*|=" << worst;
  return o;
}

Outcome criterion6() {
  Outcome o;
  const auto m = symmetric();

  // (a) Quenched mean along one fixed path against the product of mixed means.
  {
    Vector p(2);
    p << 0.3, 0.7;
    const auto strategy = Strategy::no_sensing(p);
    const auto path = sample_path(FiniteEnv::iid(Vector::Constant(2, 0.5)), 10, 61);
    SimulationOptions opts;
    opts.generations = 10;
    opts.roots = 1;
    const auto runs = run_replicates_on_path(strategy, OffspringFamily::Poisson, m, path, opts, 10000, 62);
    MeanAccumulator size;
    for (const auto& r : runs) size.add(std::exp(r.at(10).log_size()));
    double expected = 1.0;
    for (Index k = 0; k < 10; ++k) expected *= p.dot(m.mean().col(path[k]));
    const double z = std::abs(size.mean() - expected) / size.standard_error();
    o.require(z <= 3.0, "(a) quenched mean within 3 s.e.");
    o.detail << "(a) mean=" << size.mean() << " theory=" << expected << " z=" << z;
  }

  // (b) Subcritical: a pure strategy in the symmetric example.
  {
    const auto strategy = Strategy::no_sensing(Vector::Unit(2, 0));
    SimulationOptions opts;
    opts.generations = 500;
    const auto runs = run_replicates(strategy, OffspringFamily::Poisson, m, FiniteEnv::iid(Vector::Constant(2, 0.5)),
                                     opts, 1000, 63);
    const auto extinct = std::count_if(runs.begin(), runs.end(), [](const auto& r) { return r.extinct_at.has_value(); });
    const double fraction = static_cast<double>(extinct) / runs.size();
    o.require(fraction >= 0.99, "(b) extinction fraction >= 0.99");
    o.detail << "; (b) extinct fraction=" << fraction;
  }

  // (c) Supercritical: optimal no-sensing and optimal sensing strategies.
  {
    SimulationOptions opts;
    opts.generations = 500;
    const auto check = [&](const Strategy& strategy, const FiniteEnv& env, double theory, const char* label,
                           std::uint64_t seed) {
      const auto runs = run_replicates(strategy, OffspringFamily::Poisson, m, env, opts, 400, seed);
      MeanAccumulator rate;
      for (const auto& r : runs) {
        if (!r.extinct_at) rate.add(r.final_state().log_size() / 500.0);
      }
      const double err = std::abs(rate.mean() - theory);
      o.require(rate.count() > 0 && err <= 0.02, std::string("(c) ") + label + " within 0.02");
      o.detail << "; (c) " << label << " estimate=" << rate.mean() << " theory=" << theory << " surviving="
               << rate.count();
    };
    const auto iid = FiniteEnv::iid(Vector::Constant(2, 0.5));
    const auto none = optimize_no_sensing(m, iid);
    check(none.strategy, iid, none.rate, "no-sensing", 64);
    const auto chain = FiniteEnv::two_state_markov(0.2, 0.2);
    const auto sensing = optimize_sensing(m, chain);
    check(sensing.strategy, chain, sensing.rate, "sensing", 65);
  }
  return o;
}

Outcome criterion7() {
  Outcome o;
  const auto m = symmetric();
  SimulationOptions opts;
  opts.generations = 8;
  opts.roots = 5;

  Vector p(2);
  p << 0.35, 0.65;
  const auto plain = Strategy::no_sensing(p);
  const auto plain_runs =
      run_replicates(plain, OffspringFamily::Poisson, m, FiniteEnv::iid(Vector::Constant(2, 0.5)), opts, 1000, 71);
  const auto a = composition_given_size(plain_runs, plain, opts.generations, 72);

  Matrix by_state(2, 2);
  by_state << 0.8, 0.25, 0.2, 0.75;
  const auto sensing = Strategy::sensing(by_state, Vector::Constant(2, 0.5));
  const auto sensing_runs =
      run_replicates(sensing, OffspringFamily::Poisson, m, FiniteEnv::two_state_markov(0.3, 0.3), opts, 1000, 73);
  const auto b = composition_given_size(sensing_runs, sensing, opts.generations, 74);

  o.require(!a.inconclusive && a.passed, "no-sensing composition at 1%");
  o.require(!b.inconclusive && b.passed, "sensing composition at 1%");
  o.detail << "no-sensing chi2=" << a.statistic << " p=" << a.p_value << " (" << a.replicates_used
           << " replicates); sensing chi2=" << b.statistic << " p=" << b.p_value << " (" << b.replicates_used
           << " replicates)";
  return o;
}

Outcome criterion8() {
  Outcome o;
  Rng rng(808);
  double worst_mc = 0.0, worst_is = 0.0, worst_jensen = -INFINITY, worst_exact = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Index q = 2, d = 2 + static_cast<Index>(rng() % 2);
    const Index n = 1 + static_cast<Index>(rng() % 4);
    Matrix mean(q, d);
    for (Index t = 0; t < q; ++t)
      for (Index e = 0; e < d; ++e) mean(t, e) = uniform_in(rng, 0.1, 3.0);
    TraitKernel kernel;
    for (Index e = 0; e < d; ++e) kernel.push_back(random_stochastic(rng, q));
    const Vector pi0 = random_simplex(rng, q, 0.1);
    FinitePath omega;
    for (Index k = 0; k < n; ++k) omega.values.push_back(static_cast<Index>(rng() % d));
    const FitnessLandscape m(mean);

    const auto brute = oracle::enumerate(kernel, pi0, mean, omega.values, static_cast<int>(n));
    const double truth = std::log(brute.mean_weight) / n;
    worst_exact = std::max(worst_exact, std::abs(gamma_hereditary_enumerated(kernel, pi0, m, omega, n).rate - truth));

    const auto mc = gamma_hereditary(kernel, pi0, m, omega, n, 100000, 1000 + rep);
    worst_mc = std::max(worst_mc, std::abs(mc.rate - truth) / mc.std_error);

    ReferenceKernel uniform;
    for (Index e = 0; e < d; ++e) uniform.kernel.push_back(Matrix::Constant(q, q, 1.0 / q));
    const auto is = gamma_importance_sampled(kernel, uniform, pi0, m, omega, n, 100000, 2000 + rep);
    worst_is = std::max(worst_is, std::abs(is.rate - truth) / is.std_error);

    worst_jensen = std::max(worst_jensen, gamma_jensen_bound(kernel, pi0, m, omega, n) - truth);
  }
  o.require(worst_exact <= 1e-12, "library enumeration equals oracle");
  o.require(worst_mc <= 3.0, "Monte Carlo within 3 s.e.");
  o.require(worst_jensen <= 1e-12, "Jensen bound below enumerated value");
  o.require(worst_is <= 3.0, "importance sampling within 3 s.e.");
  o.detail << "max MC z=" << worst_mc << " max IS z=" << worst_is << " max(Jensen - exact)=" << worst_jensen
           << " max |enum - oracle|=" << worst_exact;
  return o;
}

// Weighted Monte Carlo over 10^6 Gaussian chains: self-normalized moments and
// delta-method standard errors.
struct GaussianChainOracle {
  Vector mean, mean_se;
  Matrix covariance, covariance_se;
  double rate = 0.0, rate_se = 0.0;
};

GaussianChainOracle gaussian_chain_oracle(const std::function<GaussianTransition(double)>& transition,
                                          double initial_mean, double initial_variance,
                                          const GaussianLandscape& landscape, const RealPath& omega, int n,
                                          long samples, std::uint64_t seed) {
  const int dim = n + 1;
  Eigen::MatrixXd paths(samples, dim);
  Eigen::VectorXd w(samples);
  Rng rng(seed);
  for (long s = 0; s < samples; ++s) {
    double t = initial_mean + std::sqrt(initial_variance) * rng.normal();
    double weight = 1.0;
    paths(s, 0) = t;
    for (int k = 0; k < n; ++k) {
      weight *= landscape(t, omega[k]);
      const auto tr = transition(omega[k]);
      t = tr.intercept + tr.slope * t + std::sqrt(tr.variance) * rng.normal();
      paths(s, k + 1) = t;
    }
    w[s] = weight;
  }
  GaussianChainOracle out;
  const double total = w.sum();
  const Vector nw = w / total;
  out.mean = paths.transpose() * nw;
  out.mean_se.resize(dim);
  out.covariance.resize(dim, dim);
  out.covariance_se.resize(dim, dim);
  const Eigen::MatrixXd centered = paths.rowwise() - out.mean.transpose();
  for (int i = 0; i < dim; ++i) {
    out.mean_se[i] = std::sqrt((nw.array().square() * centered.col(i).array().square()).sum());
    for (int j = 0; j < dim; ++j) {
      const Eigen::ArrayXd f = centered.col(i).array() * centered.col(j).array();
      const double c = (nw.array() * f).sum();
      out.covariance(i, j) = c;
      out.covariance_se(i, j) = std::sqrt((nw.array().square() * (f - c).square()).sum());
    }
  }
  const double mw = total / samples;
  const double sd = std::sqrt((w.array() - mw).square().sum() / (samples - 1));
  out.rate = std::log(mw) / n;
  out.rate_se = sd / std::sqrt(static_cast<double>(samples)) / mw / n;
  return out;
}

Outcome criterion9() {
  Outcome o;
  const auto m = symmetric();

  // (a) Product form in the symmetric example along a path visiting both states.
  {
    const auto strategy = Strategy::no_sensing(Vector::Constant(2, 0.5));
    const FinitePath omega{{0, 1, 1, 0, 1}, 0};
    const auto law = product_genealogy(strategy, m, omega, 5);
    double worst = 0.0;
    for (Index i = 0; i < 5; ++i) {
      const double favoured = 5.0 / 7.0, other = 2.0 / 7.0;
      const Index good = omega[i];
      worst = std::max({worst, std::abs(law.marginals[i][good] - favoured), std::abs(law.marginals[i][1 - good] - other)});
    }
    worst = std::max({worst, std::abs(law.marginals[5][0] - 0.5), std::abs(law.marginals[5][1] - 0.5)});
    o.require(worst <= 1e-12, "(a) product marginals within 1e-12");
    o.detail << "(a) max err=" << worst;
  }

  // (b) Gaussian law against weighted Monte Carlo at n = 4.
  {
    const GaussianLandscape landscape{1.5, 1.0};
    const auto transition = [](double e) { return GaussianTransition{0.3 * e, 0.6, 0.5}; };
    const HereditaryGenealogyKernel kernel{transition, 0.2, 1.2};
    const auto omega = sample_path(GaussianAR1Env(0.0, 1.5, 0.5), 4, 91);
    const auto law = gaussian_genealogy(kernel, landscape, omega, 4);
    const auto mc = gaussian_chain_oracle(transition, 0.2, 1.2, landscape, omega, 4, 1000000, 92);
    double worst = 0.0;
    for (Index i = 0; i < 5; ++i) {
      worst = std::max(worst, std::abs(law.mean[i] - mc.mean[i]) / mc.mean_se[i]);
      for (Index j = i; j < 5; ++j) {
        worst = std::max(worst, std::abs(law.covariance(i, j) - mc.covariance(i, j)) / mc.covariance_se(i, j));
      }
    }
    const double rate_z = std::abs(law.rate - mc.rate) / mc.rate_se;
    worst = std::max(worst, rate_z);
    o.require(worst <= 3.0, "(b) Gaussian law within 3 s.e.");
    o.detail << "; (b) max z over mean, covariance and rate=" << worst << " (rate z=" << rate_z << ")";
  }

  // (c) Lineage TV distance shrinks as the number of roots grows.
  {
    const FinitePath omega{{0, 1, 1, 0, 1, 0}, 0};
    const Index n = 6;
    SimulationOptions opts;
    opts.generations = n;
    opts.record_genealogy = true;

    const auto sweep = [&](const Strategy& strategy, const std::vector<Vector>& exact, const char* label,
                           std::uint64_t seed) {
      std::vector<double> means;
      for (std::int64_t roots : {100, 1000, 10000}) {
        opts.roots = roots;
        const auto runs = run_replicates_on_path(strategy, OffspringFamily::Poisson, m, omega, opts, 20, seed);
        MeanAccumulator tv;
        for (const auto& r : runs) {
          if (auto dist = lineage_distance(r, exact)) tv.add(*dist);
        }
        means.push_back(tv.mean());
      }
      const bool decreasing = means[0] > means[1] && means[1] > means[2];
      o.require(decreasing, std::string("(c) ") + label + " TV decreasing");
      o.detail << "; (c) " << label << " TV=" << means[0] << ", " << means[1] << ", " << means[2];
    };
    const auto plain = Strategy::no_sensing(Vector::Constant(2, 0.5));
    sweep(plain, product_genealogy(plain, m, omega, n).marginals, "product", 93);

    Matrix stay(2, 2), flip(2, 2);
    stay << 0.9, 0.1, 0.3, 0.7;
    flip << 0.4, 0.6, 0.2, 0.8;
    const Vector pi0 = Vector::Constant(2, 0.5);
    const auto hereditary = Strategy::hereditary({stay, flip}, pi0);
    sweep(hereditary, hereditary_genealogy_exact({stay, flip}, pi0, m, omega, n).marginals, "hereditary", 94);
  }
  return o;
}

Outcome criterion10() {
  Outcome o;
  Rng rng(1010);
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const Index q = 2 + static_cast<Index>(rng() % 4), d = 1 + static_cast<Index>(rng() % 5);
    Matrix mean(q, d);
    for (Index t = 0; t < q; ++t)
      for (Index e = 0; e < d; ++e) mean(t, e) = uniform_in(rng, 0.05, 3.0);
    const FitnessLandscape m(mean);
    const Vector w = random_simplex(rng, d);
    const Vector p = random_simplex(rng, q, 0.2);
    const Vector g = simplex_gradient(p, m, w);
    const double h = 1e-6;
    // Coordinate partials of gamma on the positive orthant equal g + 1.
    for (Index t = 0; t < q; ++t) {
      const Vector step = h * Vector::Unit(q, t);
      const double fd = (oracle::rate(p + step, mean, w) - oracle::rate(p - step, mean, w)) / (2 * h);
      worst = std::max(worst, std::abs(g[t] + 1.0 - fd) / std::abs(fd));
    }
    // Directional derivatives toward the vertices, compared as a vector.
    Vector fd(q);
    for (Index t = 0; t < q; ++t) {
      const Vector dir = Vector::Unit(q, t) - p;
      fd[t] = (oracle::rate(p + h * dir, mean, w) - oracle::rate(p - h * dir, mean, w)) / (2 * h);
    }
    worst = std::max(worst, (g - fd).cwiseAbs().maxCoeff() / fd.cwiseAbs().maxCoeff());
  }
  o.require(worst <= 1e-5, "relative error <= 1e-5");
  o.detail << "max relative error=" << worst;
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    Outcome (*run)();
  };
  const std::vector<Criterion> criteria{
      {1, "symmetric two-trait optimum", 1.0, criterion1},
      {2, "sensing regimes in the two-state chain", 5.0, criterion2},
      {3, "gaussian closed forms", 30.0, criterion3},
      {4, "certificate soundness on random instances", 120.0, criterion4},
      {5, "sensing equals no sensing for i.i.d. environments", 10.0, criterion5},
      {6, "simulation against theory", 300.0, criterion6},
      {7, "composition given size", 60.0, criterion7},
      {8, "hereditary growth estimators", 120.0, criterion8},
      {9, "typical genealogy laws", 300.0, criterion9},
      {10, "simplex gradient", 10.0, criterion10},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.require(seconds < c.budget_seconds, "runtime budget");
    if (!o.passed) ++failures;
    std::printf("criterion %2d %s: %s (%.2fs) %s\n", c.id, o.passed ? "PASS" : "FAIL", c.name, seconds,
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
