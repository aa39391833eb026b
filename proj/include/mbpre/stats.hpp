#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mbpre/rng.hpp"

namespace mbpre {

using Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Welford accumulator; merge() combines partial results from MC blocks.
class MeanAccumulator {
 public:
  void add(double x);
  void merge(const MeanAccumulator& other);

  std::int64_t count() const { return count_; }
  double mean() const { return mean_; }
  double variance() const;  // unbiased
  double standard_error() const;

 private:
  std::int64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// Draws an index from a fixed probability vector by inverting the CDF.
class Categorical {
 public:
  Categorical() = default;
  explicit Categorical(const Vector& probabilities);

  Index operator()(Rng& rng) const;
  Index size() const { return static_cast<Index>(cdf_.size()); }

 private:
  std::vector<double> cdf_;
};

// Multinomial(n, probabilities) via sequential conditional binomials.
std::vector<std::int64_t> sample_multinomial(std::int64_t n, const Vector& probabilities, Rng& rng);

double normal_cdf(double x);
double chi_squared_sf(double statistic, double dof);
double binomial_cdf(std::int64_t k, std::int64_t n, double p);
double binomial_pmf(std::int64_t k, std::int64_t n, double p);

// Asymptotic Kolmogorov survival function P(sqrt(n) D > lambda).
double kolmogorov_sf(double lambda);

// Lag-1 sample autocorrelation.
double lag1_correlation(std::span<const double> xs);

// Total variation distance 0.5 * sum |a - b|.
double total_variation(const Vector& a, const Vector& b);

}  // namespace mbpre
