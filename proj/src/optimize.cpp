#include "mbpre/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "mbpre/growth.hpp"

namespace mbpre {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kActiveSlack = 1e-6;

// The problem restricted to environments with positive weight.
struct Reduced {
  Matrix means;   // traits x active environments
  Vector weights;

  Reduced(const FitnessLandscape& landscape, const Vector& all_weights) {
    if (all_weights.size() != landscape.environments()) {
      throw std::domain_error("environment weights and landscape disagree on the state count");
    }
    check_distribution(all_weights, "environment weights");
    std::vector<Index> cols;
    for (Index e = 0; e < all_weights.size(); ++e) {
      if (all_weights[e] <= 0.0) continue;
      if (!(landscape.mean().col(e).maxCoeff() > 0.0)) {
        throw std::domain_error("every trait has zero mean in an environment with positive weight");
      }
      cols.push_back(e);
    }
    means.resize(landscape.traits(), static_cast<Index>(cols.size()));
    weights.resize(static_cast<Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
      means.col(static_cast<Index>(j)) = landscape.mean().col(cols[j]);
      weights[static_cast<Index>(j)] = all_weights[cols[j]];
    }
  }

  Index traits() const { return means.rows(); }
  Index envs() const { return means.cols(); }

  double rate(const Vector& p) const { return expected_log(weights, means.transpose() * p); }

  // g_t = sum_e w_e m_{t,e} / m_{p,e}; sum_t p_t g_t = 1.
  Vector ratio_sums(const Vector& p) const {
    const Vector mp = means.transpose() * p;
    if (!(mp.minCoeff() > 0.0)) return Vector::Constant(traits(), kInf);
    return means * weights.cwiseQuotient(mp);
  }
};

Vector softmax(const Vector& logits) {
  Vector p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

// Newton iterations for the problem restricted to `support`, dropping
// coordinates that reach zero. Returns an empty vector on failure.
Vector newton_on_support(const Reduced& prob, std::vector<Index> support, const Vector& start,
                         std::int64_t& iterations) {
  Vector x(static_cast<Index>(support.size()));
  for (std::size_t i = 0; i < support.size(); ++i) x[static_cast<Index>(i)] = start[support[i]];
  x = x.cwiseMax(1e-12);
  x /= x.sum();

  auto rate_of = [&](const Vector& y) {
    Vector mp = Vector::Zero(prob.envs());
    for (std::size_t i = 0; i < support.size(); ++i) mp += y[static_cast<Index>(i)] * prob.means.row(support[i]).transpose();
    return std::pair{expected_log(prob.weights, mp), mp};
  };

  double last_spread = kInf;
  // Each dropped coordinate costs one pass.
  const auto passes = 100 + static_cast<std::int64_t>(support.size());
  for (std::int64_t it = 0; it < passes; ++it) {
    ++iterations;
    const Index k = x.size();
    auto [f, mp] = rate_of(x);
    if (!std::isfinite(f)) return {};
    Matrix sub(k, prob.envs());
    for (Index i = 0; i < k; ++i) sub.row(i) = prob.means.row(support[static_cast<std::size_t>(i)]);
    const Vector r = prob.weights.cwiseQuotient(mp);
    const Vector grad = sub * r;
    const Matrix hess = -sub * (r.cwiseQuotient(mp)).asDiagonal() * sub.transpose();

    Matrix kkt = Matrix::Zero(k + 1, k + 1);
    kkt.topLeftCorner(k, k) = hess;
    kkt.block(0, k, k, 1).setOnes();
    kkt.block(k, 0, 1, k).setOnes();
    Vector rhs = Vector::Zero(k + 1);
    rhs.head(k) = -grad;
    const Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
    Vector step = sol.head(k);
    step.array() -= step.mean();  // stay on the affine hull despite rounding
    // Restricted optimum: every supported ratio sum equals one. The spread
    // stalls at rounding level; the caller checks the full certificate.
    const double spread = grad.maxCoeff() - grad.minCoeff();
    const bool stationary = spread <= 1e-14 || (spread <= 1e-9 && spread > 0.5 * last_spread);
    last_spread = spread;
    if (stationary || step.lpNorm<Eigen::Infinity>() <= 1e-14) return [&] {
      Vector full = Vector::Zero(prob.traits());
      for (Index i = 0; i < k; ++i) full[support[static_cast<std::size_t>(i)]] = x[i];
      return full;
    }();

    double to_boundary = kInf;
    Index blocking = -1;
    for (Index i = 0; i < k; ++i) {
      if (step[i] < 0.0 && -x[i] / step[i] < to_boundary) {
        to_boundary = -x[i] / step[i];
        blocking = i;
      }
    }
    if (to_boundary < 1.0) {
      x += to_boundary * step;
      x = x.cwiseMax(0.0);
      if (k == 1) return {};
      support.erase(support.begin() + blocking);
      Vector kept(k - 1);
      for (Index i = 0, j = 0; i < k; ++i) {
        if (i != blocking) kept[j++] = x[i];
      }
      x = kept / kept.sum();
      continue;
    }
    double alpha = 1.0;
    Vector trial = x + step;
    for (int back = 0; back < 40 && !(rate_of(trial).first >= f - 1e-15 * std::abs(f)); ++back) {
      alpha *= 0.5;
      trial = x + alpha * step;
    }
    x = trial.cwiseMax(0.0);
    x /= x.sum();
  }
  return {};
}

// Primal log-barrier method: maximizes gamma(p) + mu sum_t log p_t on the
// simplex for decreasing mu. At the barrier maximizer every ratio sum equals
// 1 + q mu - mu / p_t, so the gap is at most q mu. The Hessian is diagonal
// plus rank d, and Woodbury reduces each Newton step to a d x d solve:
// O(q d^2) per step. Returns an empty vector on failure.
Vector primal_barrier(const Reduced& prob, const Vector& start, double tol, std::int64_t& iterations) {
  const Index q = prob.traits();
  const Matrix& m = prob.means;
  const Vector& w = prob.weights;
  // Strictly positive start near the current iterate.
  Vector p = 0.5 * start + Vector::Constant(q, 0.5 / static_cast<double>(q));
  p /= p.sum();

  auto objective = [&](const Vector& x, double mu) {
    if (!(x.minCoeff() > 0.0)) return -kInf;
    return expected_log(w, m.transpose() * x) + mu * x.array().log().sum();
  };

  const double target = tol / (4.0 * static_cast<double>(q));
  for (double mu = 1e-2 / static_cast<double>(q);; mu = std::max(mu * 0.1, target)) {
    for (int it = 0;; ++it) {
      if (it == 200) return {};
      ++iterations;
      const Vector y = m.transpose() * p;
      const Vector ratios = m * w.cwiseQuotient(y);

      // (D + M W M^T)^{-1} with D = mu / p^2 and W = w / y^2, applied through
      // A = D^{-1/2} M W^{1/2}: D^{-1/2} (I - A (I + A^T A)^{-1} A^T) D^{-1/2}.
      const Vector d_inv_sqrt = p / std::sqrt(mu);
      const Vector w_sqrt = w.cwiseSqrt().cwiseQuotient(y);
      const Matrix a = d_inv_sqrt.asDiagonal() * m * w_sqrt.asDiagonal();
      Matrix core = a.transpose() * a;
      core.diagonal().array() += 1.0;
      const Eigen::LLT<Matrix> llt(core);
      if (llt.info() != Eigen::Success) return {};
      auto solve_once = [&](const Vector& v) {
        const Vector scaled = d_inv_sqrt.cwiseProduct(v);
        return Vector(d_inv_sqrt.cwiseProduct(scaled - a * llt.solve(a.transpose() * scaled)));
      };
      // y^2 underflows in tail environments; scale by sqrt(w) / y twice.
      auto apply = [&](const Vector& x) {
        const Vector inner = w_sqrt.cwiseProduct(w_sqrt.cwiseProduct(m.transpose() * x));
        return Vector(m * inner + mu * x.cwiseQuotient(p).cwiseQuotient(p));
      };
      // The diagonal spans many decades near the end; refine the solve.
      auto solve = [&](const Vector& v) {
        Vector x = solve_once(v);
        for (int r = 0; r < 2; ++r) x += solve_once(v - apply(x));
        return x;
      };
      const Vector grad = ratios + mu * p.cwiseInverse();
      const Vector h_grad = solve(grad);
      const Vector h_ones = solve(Vector::Ones(q));
      const Vector step = h_grad - (h_grad.sum() / h_ones.sum()) * h_ones;
      const double slope = grad.dot(step);
      if (std::isnan(slope)) return {};
      // The decrement is affine invariant; tail traits with tiny p_t leave
      // large absolute residuals that do not affect the gap.
      if (slope <= 1e-6 * mu) break;

      double alpha = 1.0;
      for (Index t = 0; t < q; ++t) {
        if (step[t] < 0.0) alpha = std::min(alpha, -0.99 * p[t] / step[t]);
      }
      const double current = objective(p, mu);
      while (alpha > 1e-16 && !(objective(p + alpha * step, mu) >= current + 0.25 * alpha * slope)) alpha *= 0.5;
      if (alpha <= 1e-16) break;
      p += alpha * step;
      p /= p.sum();
    }
    if (mu <= target) return p;
  }
}

// Candidate supports are the heaviest traits of the current iterate.
std::vector<Index> candidate_sizes(const Vector& p, Index envs) {
  std::set<Index> sizes;
  const Index q = p.size();
  if (envs + 1 <= 8) {
    for (Index k = 1; k <= std::min(q, envs + 1); ++k) sizes.insert(k);
  }
  const double top = p.maxCoeff();
  // Some optimum has at most `envs` traits in its support; larger candidates
  // only cost cubic Newton steps.
  for (double rel : {1e-2, 1e-4, 1e-6, 1e-9}) {
    const auto k = static_cast<Index>((p.array() >= rel * top).count());
    if (k <= envs + 1) sizes.insert(k);
  }
  return {sizes.begin(), sizes.end()};
}

std::vector<Index> order_by_mass(const Vector& p) {
  std::vector<Index> order(static_cast<std::size_t>(p.size()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return p[a] > p[b]; });
  return order;
}

std::vector<Index> support_of(const Vector& p, double support_tol) {
  std::vector<Index> s;
  for (Index t = 0; t < p.size(); ++t) {
    if (p[t] > support_tol) s.push_back(t);
  }
  return s;
}

bool affinely_dependent_active_set(const Reduced& prob, const Vector& ratios) {
  std::vector<Index> active;
  for (Index t = 0; t < ratios.size(); ++t) {
    if (ratios[t] >= 1.0 - kActiveSlack) active.push_back(t);
  }
  const auto k = static_cast<Index>(active.size());
  if (k <= 1) return false;
  Matrix stacked(prob.envs() + 1, k);
  for (Index j = 0; j < k; ++j) {
    stacked.col(j).head(prob.envs()) = prob.means.row(active[static_cast<std::size_t>(j)]).transpose();
    stacked(prob.envs(), j) = 1.0;
  }
  Eigen::FullPivLU<Matrix> lu(stacked);
  lu.setThreshold(1e-9);
  return lu.rank() < k;
}

OptimizationResult finish(const Reduced& prob, const FitnessLandscape& landscape, const Vector& weights, Vector p,
                          std::int64_t iterations, SolveMethod method, const SolverOptions& options) {
  const Vector ratios = prob.ratio_sums(p);
  OptimizationResult r{Strategy::no_sensing(p)};
  r.rate = growth_rate(p, landscape, weights);
  r.certificate_gap = ratios.maxCoeff() - 1.0;
  r.support = support_of(p, options.support_tol);
  r.iterations = iterations;
  r.converged = r.certificate_gap <= options.tol;
  r.non_unique = std::isfinite(r.certificate_gap) && affinely_dependent_active_set(prob, ratios);
  r.method = method;
  return r;
}

double log_or_zero(double nu) { return nu > 0.0 ? nu * std::log(nu) : 0.0; }

}  // namespace

std::string_view to_string(SolveMethod method) {
  switch (method) {
    case SolveMethod::MirrorAscent: return "mirror-ascent";
    case SolveMethod::ActiveSetNewton: return "active-set-newton";
    case SolveMethod::ClosedForm: return "closed-form";
    case SolveMethod::PerState: return "per-state";
    case SolveMethod::InteriorPoint: return "interior-point";
  }
  return "unknown";
}

const Vector& OptimizationResult::distribution() const {
  if (const auto* rule = std::get_if<NoSensing>(&strategy.rule())) return rule->p;
  throw std::logic_error("optimization result does not hold a no-sensing strategy");
}

const Matrix& OptimizationResult::by_state() const {
  if (const auto* rule = std::get_if<Sensing>(&strategy.rule())) return rule->by_state;
  throw std::logic_error("optimization result does not hold a sensing strategy");
}

double certificate_gap(const Vector& p, const FitnessLandscape& landscape, const Vector& weights) {
  if (p.size() != landscape.traits() || weights.size() != landscape.environments()) {
    throw std::domain_error("certificate_gap: dimension mismatch");
  }
  const Vector mp = mixed_mean(p, landscape);
  Vector r = Vector::Zero(weights.size());
  for (Index e = 0; e < weights.size(); ++e) {
    if (weights[e] <= 0.0) continue;
    if (!(mp[e] > 0.0)) return kInf;
    r[e] = weights[e] / mp[e];
  }
  return (landscape.mean() * r).maxCoeff() - 1.0;
}

double certificate_gap(const Vector& p, const FitnessLandscape& landscape, const FiniteEnv& env) {
  return certificate_gap(p, landscape, env.marginal());
}

OptimizationResult optimize_no_sensing(const FitnessLandscape& landscape, const Vector& weights,
                                       const SolverOptions& options) {
  const Reduced prob(landscape, weights);
  const Index q = prob.traits();

  Vector logits = Vector::Zero(q);
  Vector p = softmax(logits);
  double f = prob.rate(p);
  double step = 1.0;
  std::int64_t next_polish = 16;
  std::int64_t iterations = 0;

  while (iterations < options.max_iter) {
    const Vector ratios = prob.ratio_sums(p);
    if (ratios.maxCoeff() - 1.0 <= options.tol) {
      // Mirror steps never reach the boundary, and near a degenerate vertex the
      // gap is only quadratic in the distance to it; finish with Newton.
      const auto support = support_of(p, options.support_tol);
      const Vector polished = static_cast<Index>(support.size()) <= prob.envs() + 1
                                  ? newton_on_support(prob, support, p, iterations)
                                  : Vector();
      if (polished.size() != 0 && prob.ratio_sums(polished).maxCoeff() - 1.0 <= options.tol &&
          prob.rate(polished) >= f) {
        return finish(prob, landscape, weights, polished, iterations, SolveMethod::ActiveSetNewton, options);
      }
      return finish(prob, landscape, weights, p, iterations, SolveMethod::MirrorAscent, options);
    }
    if (iterations >= next_polish) {
      next_polish *= 2;
      const auto order = order_by_mass(p);
      for (Index k : candidate_sizes(p, prob.envs())) {
        std::vector<Index> support(order.begin(), order.begin() + k);
        std::sort(support.begin(), support.end());
        const Vector polished = newton_on_support(prob, support, p, iterations);
        if (polished.size() == 0) continue;
        if (prob.ratio_sums(polished).maxCoeff() - 1.0 <= options.tol) {
          return finish(prob, landscape, weights, polished, iterations, SolveMethod::ActiveSetNewton, options);
        }
      }
      const Vector central = primal_barrier(prob, p, options.tol, iterations);
      if (central.size() != 0 && prob.ratio_sums(central).maxCoeff() - 1.0 <= options.tol) {
        return finish(prob, landscape, weights, central, iterations, SolveMethod::InteriorPoint, options);
      }
    }
    // Multiplicative step with backtracking; the rate never decreases.
    bool accepted = false;
    while (!accepted && iterations < options.max_iter && step > 1e-300) {
      ++iterations;
      const Vector trial_logits = logits + step * ratios;
      const Vector trial = softmax(trial_logits);
      const double trial_f = prob.rate(trial);
      if (trial_f >= f) {
        logits = trial_logits.array() - trial_logits.maxCoeff();
        p = trial;
        f = trial_f;
        step = std::min(step * 2.0, 1e12);
        accepted = true;
      } else {
        step *= 0.5;
      }
    }
    if (!accepted) break;
  }
  return finish(prob, landscape, weights, p, iterations, SolveMethod::MirrorAscent, options);
}

OptimizationResult optimize_no_sensing(const FitnessLandscape& landscape, const FiniteEnv& env,
                                       const SolverOptions& options) {
  return optimize_no_sensing(landscape, env.marginal(), options);
}

bool pure_optimal(Index trait, const FitnessLandscape& landscape, const Vector& weights, double tol) {
  if (trait < 0 || trait >= landscape.traits()) throw std::out_of_range("pure_optimal: trait index out of range");
  Vector delta = Vector::Zero(landscape.traits());
  delta[trait] = 1.0;
  return certificate_gap(delta, landscape, weights) <= tol;
}

bool pure_optimal(Index trait, const FitnessLandscape& landscape, const FiniteEnv& env, double tol) {
  return pure_optimal(trait, landscape, env.marginal(), tol);
}

OptimizationResult optimize_2x2_closed_form(const FitnessLandscape& landscape, const Vector& weights,
                                            const SolverOptions& options) {
  if (landscape.traits() != 2 || landscape.environments() != 2) {
    throw std::domain_error("closed form needs exactly two traits and two environments");
  }
  const Reduced prob(landscape, weights);
  const double m11 = landscape(0, 0), m12 = landscape(0, 1);
  const double m21 = landscape(1, 0), m22 = landscape(1, 1);
  const double nu1 = weights[0], nu2 = weights[1];

  auto pure = [&](Index t) {
    Vector delta = Vector::Zero(2);
    delta[t] = 1.0;
    auto r = finish(prob, landscape, weights, delta, 0, SolveMethod::ClosedForm, options);
    r.converged = true;
    return r;
  };
  if (pure_optimal(1, landscape, weights, 0.0)) return pure(1);
  if (pure_optimal(0, landscape, weights, 0.0)) return pure(0);

  const double d_e1 = m21 - m11;
  const double d_e2 = m22 - m12;
  if (d_e1 == 0.0 || d_e2 == 0.0 || nu1 <= 0.0 || nu2 <= 0.0) return optimize_no_sensing(landscape, weights, options);
  const double p1 = nu1 * m22 / d_e2 + nu2 * m21 / d_e1;
  const double p2 = nu1 * m12 / -d_e2 + nu2 * m11 / -d_e1;
  if (!(p1 > -1e-12 && p2 > -1e-12)) return optimize_no_sensing(landscape, weights, options);

  Vector p(2);
  p << std::max(p1, 0.0), std::max(p2, 0.0);
  p /= p.sum();
  auto r = finish(prob, landscape, weights, p, 0, SolveMethod::ClosedForm, options);
  r.rate = std::log(std::abs(m11 * m22 - m12 * m21)) - nu1 * std::log(std::abs(d_e2)) - nu2 * std::log(std::abs(d_e1)) +
           log_or_zero(nu1) + log_or_zero(nu2);
  r.converged = true;
  return r;
}

OptimizationResult optimize_2x2_closed_form(const FitnessLandscape& landscape, const FiniteEnv& env,
                                            const SolverOptions& options) {
  return optimize_2x2_closed_form(landscape, env.marginal(), options);
}

OptimizationResult optimize_sensing(const FitnessLandscape& landscape, const FiniteEnv& env,
                                    const SolverOptions& options) {
  if (env.size() != landscape.environments()) throw std::domain_error("environment and landscape disagree");
  const Vector& nu = env.marginal();
  std::vector<OptimizationResult> parts;
  Matrix by_state(landscape.traits(), env.size());
  Vector initial = Vector::Zero(landscape.traits());
  double rate = 0.0;
  double gap = 0.0;
  std::int64_t iterations = 0;
  bool converged = true;
  bool non_unique = false;
  std::set<Index> support;
  for (Index e1 = 0; e1 < env.size(); ++e1) {
    auto part = optimize_no_sensing(landscape, env.conditional(e1), options);
    by_state.col(e1) = part.distribution();
    iterations += part.iterations;
    if (nu[e1] > 0.0) {
      rate += nu[e1] * part.rate;
      gap = std::max(gap, part.certificate_gap);
      converged = converged && part.converged;
      non_unique = non_unique || part.non_unique;
      initial += nu[e1] * part.distribution();
      support.insert(part.support.begin(), part.support.end());
    }
    parts.push_back(std::move(part));
  }
  OptimizationResult r{Strategy::sensing(by_state, initial / initial.sum())};
  r.rate = rate;
  r.certificate_gap = gap;
  r.support.assign(support.begin(), support.end());
  r.iterations = iterations;
  r.converged = converged;
  r.non_unique = non_unique;
  r.method = SolveMethod::PerState;
  r.per_state = std::move(parts);
  return r;
}

SurvivalQuery survival_query(const Vector& p, const FitnessLandscape& landscape, const FiniteEnv& env,
                             const SolverOptions& options) {
  return survival_query(Strategy::no_sensing(p), landscape, env, options);
}

SurvivalQuery survival_query(const Strategy& strategy, const FitnessLandscape& landscape, const FiniteEnv& env,
                             const SolverOptions& options) {
  strategy.validate(landscape.traits(), landscape.environments());
  if (env.size() != landscape.environments()) throw std::domain_error("environment and landscape disagree");
  SurvivalQuery out{strategy};
  double best_pure = 0.0;
  double optimum = 0.0;
  if (const auto* rule = std::get_if<NoSensing>(&strategy.rule())) {
    out.rate = growth_rate(rule->p, landscape, env.marginal());
    best_pure = -kInf;
    for (Index t = 0; t < landscape.traits(); ++t) {
      best_pure = std::max(best_pure, expected_log(env.marginal(), landscape.mean().row(t).transpose()));
    }
    optimum = optimize_no_sensing(landscape, env, options).rate;
  } else if (const auto* rule = std::get_if<Sensing>(&strategy.rule())) {
    out.rate = sensing_growth_rate(rule->by_state, landscape, env.pair_law());
    for (Index e1 = 0; e1 < env.size(); ++e1) {
      if (env.marginal()[e1] <= 0.0) continue;
      double best = -kInf;
      for (Index t = 0; t < landscape.traits(); ++t) {
        best = std::max(best, expected_log(env.conditional(e1), landscape.mean().row(t).transpose()));
      }
      best_pure += env.marginal()[e1] * best;
    }
    optimum = optimize_sensing(landscape, env, options).rate;
  } else {
    throw std::invalid_argument("survival_query: hereditary strategies have no closed-form rate");
  }
  out.in_survival_set = out.rate > 0.0;
  out.polymorphism_required = best_pure <= 0.0 && optimum > 0.0;
  return out;
}

}  // namespace mbpre
