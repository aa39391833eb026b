#include "mbpre/env.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace mbpre {

namespace {

constexpr double kProbabilityTol = 1e-12;
constexpr double kStationaryTol = 1e-10;

std::vector<std::string> default_labels(Index n, std::vector<std::string> labels) {
  if (labels.empty()) {
    for (Index i = 0; i < n; ++i) labels.push_back("e" + std::to_string(i + 1));
  }
  if (static_cast<Index>(labels.size()) != n) {
    throw std::invalid_argument("environment: label count does not match state count");
  }
  return labels;
}

void check_probability(const Vector& v, const char* what) {
  if (v.size() == 0) throw std::invalid_argument(std::string(what) + ": at least one state required");
  for (Index i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0.0) || !std::isfinite(v[i])) {
      throw std::invalid_argument(std::string(what) + ": probabilities must be finite and nonnegative");
    }
  }
  if (std::abs(v.sum() - 1.0) > kProbabilityTol) {
    throw std::invalid_argument(std::string(what) + ": probabilities must sum to 1");
  }
}

}  // namespace

FiniteEnv::FiniteEnv(Kind kind, Vector marginal, Matrix transition, std::vector<std::string> states)
    : kind_(kind),
      marginal_(std::move(marginal)),
      transition_(std::move(transition)),
      states_(std::move(states)) {}

FiniteEnv FiniteEnv::iid(Vector marginal, std::vector<std::string> states) {
  check_probability(marginal, "iid environment");
  auto labels = default_labels(marginal.size(), std::move(states));
  Matrix transition = marginal.transpose().replicate(marginal.size(), 1);
  return FiniteEnv(Kind::IID, std::move(marginal), std::move(transition), std::move(labels));
}

FiniteEnv FiniteEnv::markov(Matrix transition, std::vector<std::string> states) {
  if (transition.rows() == 0 || transition.rows() != transition.cols()) {
    throw std::invalid_argument("markov environment: transition matrix must be square and nonempty");
  }
  for (Index r = 0; r < transition.rows(); ++r) {
    check_probability(transition.row(r).transpose(), "markov environment row");
  }
  if (!is_irreducible(transition)) {
    throw std::invalid_argument("markov environment: chain is not irreducible");
  }
  Vector nu = stationary_distribution(transition);
  auto labels = default_labels(nu.size(), std::move(states));
  return FiniteEnv(Kind::Markov, std::move(nu), std::move(transition), std::move(labels));
}

FiniteEnv FiniteEnv::two_state_markov(double q1, double q2) {
  if (!(q1 > 0.0 && q1 < 1.0 && q2 > 0.0 && q2 < 1.0)) {
    throw std::invalid_argument("two-state markov environment: switch probabilities must lie in (0, 1)");
  }
  Matrix p(2, 2);
  p << 1.0 - q1, q1, q2, 1.0 - q2;
  return markov(std::move(p));
}

Index FiniteEnv::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < states_.size(); ++i) {
    if (states_[i] == label) return static_cast<Index>(i);
  }
  throw std::domain_error("unknown environment state '" + std::string(label) + "'");
}

Vector FiniteEnv::conditional(Index e1) const {
  if (e1 < 0 || e1 >= size()) throw std::domain_error("conditional: state index out of range");
  if (kind_ == Kind::IID) return marginal_;
  return transition_.row(e1).transpose();
}

Matrix FiniteEnv::pair_law() const { return marginal_.asDiagonal() * transition_; }

FinitePath FiniteEnv::sample_path(Index n, Rng& rng) const {
  if (n < 1) throw std::invalid_argument("sample_path: length must be at least 1");
  FinitePath path;
  path.values.reserve(static_cast<std::size_t>(n));
  Categorical first(marginal_);
  if (kind_ == Kind::IID) {
    for (Index k = 0; k < n; ++k) path.values.push_back(first(rng));
    return path;
  }
  std::vector<Categorical> rows;
  for (Index r = 0; r < size(); ++r) rows.emplace_back(transition_.row(r).transpose());
  Index state = first(rng);
  path.values.push_back(state);
  for (Index k = 1; k < n; ++k) {
    state = rows[static_cast<std::size_t>(state)](rng);
    path.values.push_back(state);
  }
  return path;
}

GaussianAR1Env::GaussianAR1Env(double mean, double variance, double rho)
    : mean_(mean), variance_(variance), rho_(rho) {
  if (!std::isfinite(mean)) throw std::invalid_argument("gaussian environment: mean must be finite");
  if (!(variance > 0.0) || !std::isfinite(variance)) {
    throw std::invalid_argument("gaussian environment: variance must be positive");
  }
  if (!(std::abs(rho) < 1.0)) throw std::invalid_argument("gaussian environment: |rho| must be < 1");
}

Normal GaussianAR1Env::conditional(double e1) const {
  return {mean_ + rho_ * (e1 - mean_), (1.0 - rho_ * rho_) * variance_};
}

Eigen::Matrix2d GaussianAR1Env::pair_covariance() const {
  Eigen::Matrix2d cov;
  cov << variance_, rho_ * variance_, rho_ * variance_, variance_;
  return cov;
}

RealPath GaussianAR1Env::sample_path(Index n, Rng& rng) const {
  if (n < 1) throw std::invalid_argument("sample_path: length must be at least 1");
  RealPath path;
  path.values.reserve(static_cast<std::size_t>(n));
  const double sd = std::sqrt(variance_);
  const double innovation = std::sqrt(1.0 - rho_ * rho_) * sd;
  double w = mean_ + sd * rng.normal();
  path.values.push_back(w);
  for (Index k = 1; k < n; ++k) {
    w = mean_ + rho_ * (w - mean_) + innovation * rng.normal();
    path.values.push_back(w);
  }
  return path;
}

bool is_irreducible(const Matrix& transition) {
  const Index n = transition.rows();
  auto reaches_all = [n](const Matrix& adj) {
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::deque<Index> queue{0};
    seen[0] = true;
    Index visited = 1;
    while (!queue.empty()) {
      Index i = queue.front();
      queue.pop_front();
      for (Index j = 0; j < n; ++j) {
        if (adj(i, j) > 0.0 && !seen[static_cast<std::size_t>(j)]) {
          seen[static_cast<std::size_t>(j)] = true;
          ++visited;
          queue.push_back(j);
        }
      }
    }
    return visited == n;
  };
  return reaches_all(transition) && reaches_all(transition.transpose());
}

Vector stationary_distribution(const Matrix& transition) {
  const Index n = transition.rows();
  Matrix system(n + 1, n);
  system.topRows(n) = transition.transpose() - Matrix::Identity(n, n);
  system.row(n).setOnes();
  Vector rhs = Vector::Zero(n + 1);
  rhs[n] = 1.0;
  Vector nu = system.colPivHouseholderQr().solve(rhs);

  auto residual = [&](const Vector& v) { return (transition.transpose() * v - v).cwiseAbs().maxCoeff(); };
  if (!(nu.minCoeff() > -kStationaryTol) || !(residual(nu) <= kStationaryTol)) {
    // Cesaro-averaged power iteration converges for periodic chains too.
    Vector x = Vector::Constant(n, 1.0 / static_cast<double>(n));
    Vector avg = Vector::Zero(n);
    for (int it = 1; it <= 200000; ++it) {
      x = transition.transpose() * x;
      avg += (x - avg) / static_cast<double>(it);
      if (it % 1000 == 0 && residual(avg) <= kStationaryTol * 0.1) break;
    }
    nu = avg;
  }
  nu = nu.cwiseMax(0.0);
  nu /= nu.sum();
  return nu;
}

FinitePath sample_path(const FiniteEnv& env, Index n, std::uint64_t seed) {
  Rng rng(seed);
  FinitePath path = env.sample_path(n, rng);
  path.seed = seed;
  return path;
}

RealPath sample_path(const GaussianAR1Env& env, Index n, std::uint64_t seed) {
  Rng rng(seed);
  RealPath path = env.sample_path(n, rng);
  path.seed = seed;
  return path;
}

}  // namespace mbpre
