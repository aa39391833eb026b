#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "mbpre/env.hpp"
#include "mbpre/gaussian.hpp"
#include "mbpre/growth.hpp"
#include "mbpre/model.hpp"
#include "mbpre/simulate.hpp"

namespace mbpre {

// Independent coordinates T_0 .. T_n of the mean-field typical genealogy.
struct ProductGenealogyLaw {
  std::vector<Vector> marginals;  // n + 1 trait laws
};

// Non-hereditary strategies: marginal 0 is pi0 biased by m_{.,omega_0};
// marginal i in 1..n-1 is p_{omega_{i-1}} biased by m_{.,omega_i}; marginal n
// is p_{omega_{n-1}} unbiased. Throws std::domain_error on a zero normalizer.
ProductGenealogyLaw product_genealogy(const Strategy& strategy, const FitnessLandscape& landscape,
                                      const FinitePath& omega, Index n);

// T_0 ~ N(initial_mean, initial_variance); given environment e,
// T_{k+1} = intercept(e) + slope(e) T_k + N(0, variance(e)).
struct GaussianTransition {
  double intercept = 0.0;
  double slope = 0.0;
  double variance = 1.0;
};

struct HereditaryGenealogyKernel {
  std::function<GaussianTransition(double e)> transition;
  double initial_mean = 0.0;
  double initial_variance = 1.0;
};

struct GaussianGenealogyLaw {
  Vector mean;        // posterior mean of (T_0 .. T_n) under the M_n weighting
  Matrix covariance;  // posterior covariance
  double rate = 0.0;  // n^{-1} log E[M_n]

  // Chain law before weighting and its ingredients. The chain is
  // (I - lower) T = intercepts + sqrt(variances) N with `lower` strictly
  // lower bidiagonal.
  Vector prior_mean;
  Matrix prior_covariance;
  Vector intercepts;
  Matrix lower;
  Vector variances;
  Vector selection;  // 1 for the n coordinates that reproduce, 0 for T_n
  Vector targets;    // (omega_0 .. omega_{n-1}, 0)
};

// Exact Gaussian law of the weighted chain for a Gaussian fitness landscape.
// Throws std::domain_error for nonpositive variances or an ill-conditioned
// prior covariance (condition number above 1e12).
GaussianGenealogyLaw gaussian_genealogy(const HereditaryGenealogyKernel& kernel, const GaussianLandscape& landscape,
                                        const RealPath& omega, Index n);

struct GenealogyMarginals {
  std::vector<Vector> marginals;
  double log_mean_weight = 0.0;  // log E[M_n]
};

// Exact marginals of the weighted chain for a finite hereditary kernel by a
// forward-backward pass, O(n q^2).
GenealogyMarginals hereditary_genealogy_exact(const TraitKernel& kernel, const Vector& pi0,
                                              const FitnessLandscape& landscape, const FinitePath& omega, Index n);

struct WeightedPathSample {
  std::vector<Vector> marginals;    // self-normalized estimates
  std::vector<Vector> std_errors;   // delta-method standard errors
  double effective_sample_size = 0.0;
  double mean_weight = 0.0;         // estimate of E[M_n]
  std::int64_t samples = 0;
  // Filled only when requested: one row per chain, weight normalized to sum one.
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> paths;
  Vector weights;
};

// Chains drawn from pi0 and the kernel, weighted by M_n. Throws
// std::domain_error if every weight is zero.
WeightedPathSample hereditary_genealogy_mc(const TraitKernel& kernel, const Vector& pi0,
                                           const FitnessLandscape& landscape, const FinitePath& omega, Index n,
                                           std::int64_t samples, std::uint64_t seed,
                                           unsigned threads = default_threads(), bool keep_paths = false);

// Largest total-variation distance over generations between the run's
// lineage marginals and `exact`; nullopt when the last generation is empty.
std::optional<double> lineage_distance(const SimulationRun& run, const std::vector<Vector>& exact);

}  // namespace mbpre
