#include "mbpre/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

namespace mbpre {

void MeanAccumulator::add(double x) {
  ++count_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (x - mean_);
}

void MeanAccumulator::merge(const MeanAccumulator& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double n1 = static_cast<double>(count_);
  const double n2 = static_cast<double>(other.count_);
  const double delta = other.mean_ - mean_;
  const double n = n1 + n2;
  mean_ += delta * n2 / n;
  m2_ += other.m2_ + delta * delta * n1 * n2 / n;
  count_ += other.count_;
}

double MeanAccumulator::variance() const {
  return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0;
}

double MeanAccumulator::standard_error() const {
  return count_ > 1 ? std::sqrt(variance() / static_cast<double>(count_)) : 0.0;
}

Categorical::Categorical(const Vector& probabilities) {
  if (probabilities.size() == 0) throw std::invalid_argument("categorical: empty distribution");
  cdf_.resize(static_cast<std::size_t>(probabilities.size()));
  double acc = 0.0;
  for (Index i = 0; i < probabilities.size(); ++i) {
    if (!(probabilities[i] >= 0.0)) throw std::invalid_argument("categorical: negative probability");
    acc += probabilities[i];
    cdf_[static_cast<std::size_t>(i)] = acc;
  }
  if (!(acc > 0.0)) throw std::invalid_argument("categorical: zero total mass");
  for (double& c : cdf_) c /= acc;
  Index last = probabilities.size() - 1;
  while (last > 0 && probabilities[last] == 0.0) --last;
  std::fill(cdf_.begin() + last, cdf_.end(), 1.0);
}

Index Categorical::operator()(Rng& rng) const {
  const double u = rng.uniform();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  if (it == cdf_.end()) --it;
  return static_cast<Index>(it - cdf_.begin());
}

std::vector<std::int64_t> sample_multinomial(std::int64_t n, const Vector& probabilities, Rng& rng) {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(probabilities.size()), 0);
  Index last = probabilities.size() - 1;
  while (last > 0 && !(probabilities[last] > 0.0)) --last;
  double remaining_mass = probabilities.sum();
  std::int64_t remaining = n;
  for (Index i = 0; i <= last && remaining > 0; ++i) {
    const double p = probabilities[i];
    std::int64_t k;
    if (i == last || p >= remaining_mass) {
      k = remaining;
    } else if (p <= 0.0) {
      k = 0;
    } else {
      std::binomial_distribution<std::int64_t> binom(remaining, std::clamp(p / remaining_mass, 0.0, 1.0));
      k = binom(rng);
    }
    counts[static_cast<std::size_t>(i)] = k;
    remaining -= k;
    remaining_mass -= p;
  }
  return counts;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double chi_squared_sf(double statistic, double dof) {
  if (statistic <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(dof), statistic));
}

double binomial_cdf(std::int64_t k, std::int64_t n, double p) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  return boost::math::cdf(boost::math::binomial_distribution<double>(static_cast<double>(n), p),
                          static_cast<double>(k));
}

double binomial_pmf(std::int64_t k, std::int64_t n, double p) {
  if (k < 0 || k > n) return 0.0;
  return boost::math::pdf(boost::math::binomial_distribution<double>(static_cast<double>(n), p),
                          static_cast<double>(k));
}

double kolmogorov_sf(double lambda) {
  if (lambda <= 0.0) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double lag1_correlation(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 3) throw std::invalid_argument("lag1_correlation: need at least 3 samples");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    den += (xs[i] - mean) * (xs[i] - mean);
    if (i + 1 < n) num += (xs[i] - mean) * (xs[i + 1] - mean);
  }
  return num / den;
}

double total_variation(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) throw std::invalid_argument("total_variation: size mismatch");
  return 0.5 * (a - b).cwiseAbs().sum();
}

}  // namespace mbpre
