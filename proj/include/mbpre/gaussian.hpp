#pragma once

#include <cmath>

#include "mbpre/env.hpp"
#include "mbpre/model.hpp"

namespace mbpre {

// Gaussian fitness landscape in a stationary Gaussian AR(1) environment.
struct GaussianProblem {
  GaussianLandscape landscape;
  GaussianAR1Env env;

  // Environmental variance over fitness width.
  double chi() const { return env.variance() / landscape.width_sq; }
};

struct GaussianOptimum {
  GaussianStrategy strategy;
  double rate = 0.0;
};

struct GaussianSensingOptimum {
  GaussianSensingStrategy strategy;
  double rate = 0.0;
};

// Best single Gaussian (possibly Dirac) against the marginal law N(mu, variance).
GaussianOptimum gaussian_optimal_for(const GaussianLandscape& landscape, Normal env_law);

GaussianOptimum gaussian_optimal_no_sensing(const GaussianProblem& problem);
GaussianSensingOptimum gaussian_optimal_sensing(const GaussianProblem& problem);

template <class Scalar>
Scalar gaussian_gain_mixed_over_pure(Scalar chi) {
  using std::log;
  return chi >= Scalar(1) ? Scalar(0.5) * (chi - Scalar(1) - log(chi)) : Scalar(0);
}

template <class Scalar>
Scalar gaussian_gain_sensing_over_no_sensing(Scalar chi, Scalar rho) {
  using std::log;
  const Scalar unexplained = Scalar(1) - rho * rho;
  if (chi <= Scalar(1)) return Scalar(0.5) * rho * rho * chi;
  if (chi * unexplained <= Scalar(1)) return Scalar(0.5) * log(chi) - Scalar(0.5) * unexplained * chi + Scalar(0.5);
  return Scalar(-0.5) * log(unexplained);
}

double gaussian_gain_mixed_over_pure(const GaussianProblem& problem);
double gaussian_gain_sensing_over_no_sensing(const GaussianProblem& problem);

// Integral of m_{t,e} / m_{p,e} against env_law, in closed form. +infinity
// when the integrand is not integrable.
double gaussian_certificate(double trait, const GaussianStrategy& p, const GaussianLandscape& landscape,
                            Normal env_law);

// Gauss-Hermite rule for N(mean, variance); weights sum to one.
struct QuadratureRule {
  Vector nodes;
  Vector weights;
};

QuadratureRule gauss_hermite(Index order, Normal law);

// Finite problem on a trait grid with the environment replaced by quadrature nodes.
struct DiscretizedProblem {
  Vector traits;
  FitnessLandscape landscape;
  Vector weights;
};

DiscretizedProblem discretize(const GaussianLandscape& landscape, Normal env_law, const TraitGrid& grid,
                              Index nodes = 80);

// mu +/- 6 max(sigma1, sigma2) with the given step.
TraitGrid default_trait_grid(const GaussianLandscape& landscape, Normal env_law, double step);

}  // namespace mbpre
