#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mbpre/rng.hpp"
#include "mbpre/stats.hpp"

namespace mbpre {

/// Mean offspring counts m(t, e) on finitely many traits and environments.
///
/// Rows are traits, columns environment states. Every entry is finite and
/// nonnegative.
class FitnessLandscape {
 public:
  explicit FitnessLandscape(Matrix mean, std::vector<std::string> traits = {},
                            std::vector<std::string> environments = {});

  static FitnessLandscape from_csv(std::istream& in);
  static FitnessLandscape from_csv_file(const std::string& path);

  Index traits() const { return mean_.rows(); }
  Index environments() const { return mean_.cols(); }
  const Matrix& mean() const { return mean_; }
  double operator()(Index t, Index e) const { return mean_(t, e); }

  const std::vector<std::string>& trait_labels() const { return trait_labels_; }
  const std::vector<std::string>& environment_labels() const { return env_labels_; }

  // Upper bound M on the means.
  double bound() const { return mean_.maxCoeff(); }

 private:
  Matrix mean_;
  std::vector<std::string> trait_labels_;
  std::vector<std::string> env_labels_;
};

// m(t, e) = C / sqrt(2 pi s1) exp(-(t - e)^2 / (2 s1)).
template <class Scalar>
struct BasicGaussianLandscape {
  Scalar scale;     // C > 0
  Scalar width_sq;  // sigma_1^2 > 0

  Scalar operator()(Scalar t, Scalar e) const {
    using std::exp;
    using std::sqrt;
    const Scalar d = t - e;
    return scale / sqrt(Scalar(2) * std::numbers::pi_v<Scalar> * width_sq) * exp(-d * d / (Scalar(2) * width_sq));
  }
  Scalar peak() const {
    using std::sqrt;
    return scale / sqrt(Scalar(2) * std::numbers::pi_v<Scalar> * width_sq);
  }
};
using GaussianLandscape = BasicGaussianLandscape<double>;

void validate(const GaussianLandscape& landscape);

// N(mean, variance); variance == 0 is the Dirac mass at `mean`.
template <class Scalar>
struct BasicGaussianStrategy {
  Scalar mean = 0;
  Scalar variance = 0;

  bool is_dirac() const { return variance == Scalar(0); }
};
using GaussianStrategy = BasicGaussianStrategy<double>;

// e -> N(intercept + slope e, variance): a sensing rule over a real environment.
template <class Scalar>
struct BasicGaussianSensingStrategy {
  Scalar slope = 0;
  Scalar intercept = 0;
  Scalar variance = 0;

  BasicGaussianStrategy<Scalar> at(Scalar e) const { return {intercept + slope * e, variance}; }
};
using GaussianSensingStrategy = BasicGaussianSensingStrategy<double>;

// Uniform trait grid lo, lo + step, ..., <= hi.
struct TraitGrid {
  double lo;
  double hi;
  double step;

  Vector points() const;
};

// Tabulates a Gaussian landscape on trait points x environment points.
FitnessLandscape tabulate(const GaussianLandscape& landscape, const Vector& traits, const Vector& env_points);

// m_{p,e} for every environment: the p-mixture of the landscape columns.
template <class Derived>
Vector mixed_mean(const Eigen::MatrixBase<Derived>& p, const FitnessLandscape& landscape) {
  return landscape.mean().transpose() * p;
}

template <class Derived>
double mixed_mean(const Eigen::MatrixBase<Derived>& p, const FitnessLandscape& landscape, Index e) {
  return landscape.mean().col(e).dot(p);
}

// Gaussian mixture of Gaussians: C / sqrt(2 pi (s1 + sp)) exp(-(mp - e)^2 / (2 (s1 + sp))).
template <class Scalar>
Scalar mixed_mean(const BasicGaussianStrategy<Scalar>& p, const BasicGaussianLandscape<Scalar>& landscape, Scalar e) {
  return BasicGaussianLandscape<Scalar>{landscape.scale, landscape.width_sq + p.variance}(p.mean, e);
}

enum class OffspringFamily { Poisson, Geometric, Bernoulli };

OffspringFamily parse_offspring_family(std::string_view name);
std::string_view to_string(OffspringFamily family);

// One offspring count with the given mean. Bernoulli means floor(m) + Bernoulli(m - floor(m)).
std::int64_t sample_offspring(OffspringFamily family, double mean, Rng& rng);
// Sum of `parents` independent offspring counts, drawn in one shot.
std::int64_t sample_offspring_total(OffspringFamily family, double mean, std::int64_t parents, Rng& rng);
double offspring_variance(OffspringFamily family, double mean);
double zero_offspring_probability(OffspringFamily family, double mean);

struct NoSensing {
  Vector p;
};

// Column e of `by_state` is p_e, the law used by parents living in state e.
struct Sensing {
  Matrix by_state;
};

// kernel[e](t, t') = pi_{t,e}(t'); each matrix is row-stochastic.
struct Hereditary {
  std::vector<Matrix> kernel;
};

/// Trait-assignment rule plus the law pi_0 of generation-0 traits.
class Strategy {
 public:
  using Rule = std::variant<NoSensing, Sensing, Hereditary>;

  Strategy(Rule rule, Vector initial);

  static Strategy no_sensing(Vector p);
  static Strategy no_sensing(Vector p, Vector initial);
  static Strategy sensing(Matrix by_state, Vector initial);
  static Strategy hereditary(std::vector<Matrix> kernel, Vector initial);

  const Rule& rule() const { return rule_; }
  const Vector& initial() const { return initial_; }
  Index traits() const { return initial_.size(); }

  bool is_hereditary() const { return std::holds_alternative<Hereditary>(rule_); }

  // pi_{t,e}: law of a child's trait for a parent of trait t in state e.
  Vector child_law(Index parent_trait, Index env) const;

  // Throws std::invalid_argument unless dimensions match and every law is normalized.
  void validate(Index traits, Index environments) const;

 private:
  Rule rule_;
  Vector initial_;
};

void check_distribution(const Vector& p, std::string_view what);

}  // namespace mbpre
