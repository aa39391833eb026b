#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "mbpre/rng.hpp"
#include "mbpre/stats.hpp"

namespace mbpre {

struct Normal {
  double mean = 0.0;
  double variance = 1.0;
};

// A realized environment sequence omega_0 .. omega_{n-1}.
template <class State>
struct EnvironmentPath {
  std::vector<State> values;
  std::uint64_t seed = 0;

  Index size() const { return static_cast<Index>(values.size()); }
  const State& operator[](Index k) const { return values[static_cast<std::size_t>(k)]; }
};

using FinitePath = EnvironmentPath<Index>;
using RealPath = EnvironmentPath<double>;

/// Stationary environment on finitely many states.
///
/// Two families share this type: i.i.d. sequences (every row of the
/// transition matrix equals the marginal) and irreducible Markov chains
/// started from their stationary law. Both expose the marginal nu1, the
/// conditional law nu_{e1} of the next state, and the pair law nu2.
class FiniteEnv {
 public:
  enum class Kind { IID, Markov };

  static FiniteEnv iid(Vector marginal, std::vector<std::string> states = {});
  static FiniteEnv markov(Matrix transition, std::vector<std::string> states = {});
  // Chain on {e1, e2} leaving e1 with probability q1 and e2 with probability q2.
  static FiniteEnv two_state_markov(double q1, double q2);

  Kind kind() const { return kind_; }
  Index size() const { return marginal_.size(); }
  const Vector& marginal() const { return marginal_; }
  const Matrix& transition() const { return transition_; }
  const std::vector<std::string>& states() const { return states_; }
  Index index_of(std::string_view label) const;

  // nu_{e1}: law of omega_{k+1} given omega_k = e1. Throws std::domain_error
  // when e1 is not a state.
  Vector conditional(Index e1) const;

  // nu2(e1, e2) = nu1(e1) nu_{e1}(e2).
  Matrix pair_law() const;

  FinitePath sample_path(Index n, Rng& rng) const;

 private:
  FiniteEnv(Kind kind, Vector marginal, Matrix transition, std::vector<std::string> states);

  Kind kind_;
  Vector marginal_;
  Matrix transition_;
  std::vector<std::string> states_;
};

// Stationary Gaussian AR(1): omega_0 ~ N(mu, s2), omega_n = mu + rho (omega_{n-1} - mu)
// + sqrt(1 - rho^2) sigma eta_n.
class GaussianAR1Env {
 public:
  GaussianAR1Env(double mean, double variance, double rho);

  double mean() const { return mean_; }
  double variance() const { return variance_; }
  double rho() const { return rho_; }

  Normal marginal() const { return {mean_, variance_}; }
  Normal conditional(double e1) const;
  // Covariance of (omega_k, omega_{k+1}).
  Eigen::Matrix2d pair_covariance() const;

  RealPath sample_path(Index n, Rng& rng) const;

 private:
  double mean_;
  double variance_;
  double rho_;
};

using EnvironmentModel = std::variant<FiniteEnv, GaussianAR1Env>;

// Stationary Markov chain law: solves nu P = nu with sum(nu) = 1, falling back
// to averaged power iteration when the direct solve is inaccurate.
Vector stationary_distribution(const Matrix& transition);

bool is_irreducible(const Matrix& transition);

FinitePath sample_path(const FiniteEnv& env, Index n, std::uint64_t seed);
RealPath sample_path(const GaussianAR1Env& env, Index n, std::uint64_t seed);

}  // namespace mbpre
