#include "mbpre/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace mbpre {

namespace {

double log_two_pi() { return std::log(2.0 * std::numbers::pi); }

}  // namespace

GaussianOptimum gaussian_optimal_for(const GaussianLandscape& landscape, Normal env_law) {
  validate(landscape);
  if (!(env_law.variance >= 0.0)) throw std::invalid_argument("environment law: variance must be >= 0");
  const double width = landscape.width_sq;
  const double spread = env_law.variance;
  const double log_scale = std::log(landscape.scale);
  if (spread <= width) {
    return {{env_law.mean, 0.0}, log_scale - 0.5 * (log_two_pi() + std::log(width)) - spread / (2.0 * width)};
  }
  return {{env_law.mean, spread - width}, log_scale - 0.5 * (log_two_pi() + std::log(spread)) - 0.5};
}

GaussianOptimum gaussian_optimal_no_sensing(const GaussianProblem& problem) {
  return gaussian_optimal_for(problem.landscape, problem.env.marginal());
}

GaussianSensingOptimum gaussian_optimal_sensing(const GaussianProblem& problem) {
  const double mu = problem.env.mean();
  const double rho = problem.env.rho();
  // Every conditional law has the same variance, so one solve covers all e.
  const auto per_state = gaussian_optimal_for(problem.landscape, problem.env.conditional(mu));
  return {{rho, mu * (1.0 - rho), per_state.strategy.variance}, per_state.rate};
}

double gaussian_gain_mixed_over_pure(const GaussianProblem& problem) {
  return gaussian_gain_mixed_over_pure(problem.chi());
}

double gaussian_gain_sensing_over_no_sensing(const GaussianProblem& problem) {
  return gaussian_gain_sensing_over_no_sensing(problem.chi(), problem.env.rho());
}

double gaussian_certificate(double trait, const GaussianStrategy& p, const GaussianLandscape& landscape,
                            Normal env_law) {
  validate(landscape);
  if (p.variance < 0.0) throw std::invalid_argument("gaussian strategy: variance must be >= 0");
  const double w = landscape.width_sq;
  const double v = w + p.variance;
  const double s = env_law.variance;
  const double m = env_law.mean;
  const double prefactor = std::sqrt(v / w);
  if (s == 0.0) {
    return prefactor * std::exp(-(trait - m) * (trait - m) / (2.0 * w) + (p.mean - m) * (p.mean - m) / (2.0 * v));
  }
  // exponent(e) = -a e^2 / 2 + b e + c
  const double a = 1.0 / w - 1.0 / v + 1.0 / s;
  if (!(a > 0.0)) return std::numeric_limits<double>::infinity();
  const double b = trait / w - p.mean / v + m / s;
  const double c = -trait * trait / (2.0 * w) + p.mean * p.mean / (2.0 * v) - m * m / (2.0 * s);
  return prefactor / std::sqrt(s * a) * std::exp(b * b / (2.0 * a) + c);
}

QuadratureRule gauss_hermite(Index order, Normal law) {
  if (order < 1) throw std::invalid_argument("gauss_hermite: order must be >= 1");
  if (!(law.variance >= 0.0)) throw std::invalid_argument("gauss_hermite: variance must be >= 0");
  // Jacobi matrix of the probabilists' Hermite polynomials.
  Matrix jacobi = Matrix::Zero(order, order);
  for (Index k = 1; k < order; ++k) {
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(jacobi);
  if (solver.info() != Eigen::Success) throw std::runtime_error("gauss_hermite: eigen decomposition failed");
  QuadratureRule rule;
  rule.nodes = law.mean + std::sqrt(law.variance) * solver.eigenvalues().array();
  rule.weights = solver.eigenvectors().row(0).array().square().transpose();
  rule.weights /= rule.weights.sum();
  return rule;
}

DiscretizedProblem discretize(const GaussianLandscape& landscape, Normal env_law, const TraitGrid& grid, Index nodes) {
  const auto rule = gauss_hermite(nodes, env_law);
  Vector traits = grid.points();
  // Far tail nodes where every tabulated mean underflows carry negligible weight; drop them.
  std::vector<Index> kept;
  for (Index j = 0; j < rule.nodes.size(); ++j) {
    const double nearest = std::clamp(rule.nodes[j], traits.minCoeff(), traits.maxCoeff());
    if (landscape(nearest, rule.nodes[j]) > 0.0) kept.push_back(j);
  }
  Vector env_points(static_cast<Index>(kept.size()));
  Vector weights(static_cast<Index>(kept.size()));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    env_points[static_cast<Index>(i)] = rule.nodes[kept[i]];
    weights[static_cast<Index>(i)] = rule.weights[kept[i]];
  }
  FitnessLandscape table = tabulate(landscape, traits, env_points);
  return {std::move(traits), std::move(table), weights / weights.sum()};
}

TraitGrid default_trait_grid(const GaussianLandscape& landscape, Normal env_law, double step) {
  const double half = 6.0 * std::sqrt(std::max(landscape.width_sq, env_law.variance));
  return {env_law.mean - half, env_law.mean + half, step};
}

}  // namespace mbpre
