#include "mbpre/growth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace mbpre {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_dimensions(const Vector& p, const FitnessLandscape& landscape, const Vector& weights) {
  if (p.size() != landscape.traits()) throw std::domain_error("strategy and landscape disagree on the trait count");
  if (weights.size() != landscape.environments()) {
    throw std::domain_error("environment and landscape disagree on the state count");
  }
}

GrowthReport report_from_weights(const MeanAccumulator& acc, Index n, GrowthMethod method) {
  GrowthReport r;
  r.method = method;
  r.horizon = n;
  const double nd = static_cast<double>(n);
  if (!(acc.mean() > 0.0)) {
    r.rate = kNegInf;
    r.all_weights_zero = true;
    return r;
  }
  r.rate = std::log(acc.mean()) / nd;
  r.std_error = acc.standard_error() / (acc.mean() * nd);
  return r;
}

template <class Draw>
MeanAccumulator accumulate_blocks(std::int64_t samples, std::uint64_t seed, unsigned threads, Draw draw) {
  if (samples < 1) throw std::invalid_argument("monte carlo: need at least one sample");
  const auto total = static_cast<std::size_t>(samples);
  const std::size_t blocks = block_count(total);
  std::vector<MeanAccumulator> partial(blocks);
  Rng root(seed);
  parallel_blocks(blocks, threads, [&](std::size_t b) {
    Rng rng = root.split(b);
    std::vector<Index> path;
    const std::size_t end = std::min(total, (b + 1) * kBlockSize);
    for (std::size_t i = b * kBlockSize; i < end; ++i) partial[b].add(draw(rng, path));
  });
  MeanAccumulator acc;
  for (const auto& p : partial) acc.merge(p);
  return acc;
}

}  // namespace

void check_hereditary_inputs(const TraitKernel& kernel, const Vector& pi0, const FitnessLandscape& landscape,
                             const FinitePath& omega, Index n) {
  const Index q = landscape.traits();
  if (n < 1) throw std::invalid_argument("hereditary growth: horizon must be at least 1");
  if (omega.size() < n) throw std::invalid_argument("hereditary growth: environment path shorter than the horizon");
  if (pi0.size() != q) throw std::domain_error("hereditary growth: pi0 has the wrong number of traits");
  check_distribution(pi0, "pi0");
  if (static_cast<Index>(kernel.size()) != landscape.environments()) {
    throw std::domain_error("hereditary growth: need one kernel matrix per environment state");
  }
  for (const auto& k : kernel) {
    if (k.rows() != q || k.cols() != q) throw std::domain_error("hereditary growth: kernel has the wrong shape");
    for (Index t = 0; t < q; ++t) check_distribution(k.row(t).transpose(), "kernel row");
  }
  for (Index i = 0; i < n; ++i) {
    if (omega[i] < 0 || omega[i] >= landscape.environments()) {
      throw std::domain_error("hereditary growth: environment path leaves the state space");
    }
  }
}

ChainSampler::ChainSampler(const TraitKernel& kernel, const Vector& pi0) : initial_(pi0) {
  for (const auto& k : kernel) {
    std::vector<Categorical> rows;
    for (Index t = 0; t < k.rows(); ++t) rows.emplace_back(k.row(t).transpose());
    rows_.push_back(std::move(rows));
  }
}

void ChainSampler::draw(const FinitePath& omega, Index n, Rng& rng, std::vector<Index>& path) const {
  path.resize(static_cast<std::size_t>(n + 1));
  path[0] = initial_(rng);
  for (Index k = 0; k < n; ++k) {
    const auto& row = rows_[static_cast<std::size_t>(omega[k])][static_cast<std::size_t>(path[static_cast<std::size_t>(k)])];
    path[static_cast<std::size_t>(k + 1)] = row(rng);
  }
}

double path_weight(const std::vector<Index>& path, const FitnessLandscape& landscape, const FinitePath& omega,
                   Index n) {
  double w = 1.0;
  for (Index k = 0; k < n; ++k) w *= landscape(path[static_cast<std::size_t>(k)], omega[k]);
  return w;
}

std::string_view to_string(GrowthMethod method) {
  switch (method) {
    case GrowthMethod::Exact: return "exact";
    case GrowthMethod::ErgodicMC: return "ergodic-mc";
    case GrowthMethod::PathEnumeration: return "path-enumeration";
    case GrowthMethod::MonteCarlo: return "monte-carlo";
    case GrowthMethod::ImportanceSampled: return "importance-sampled";
  }
  return "unknown";
}

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::Subcritical: return "subcritical";
    case Regime::Critical: return "critical";
    case Regime::Supercritical: return "supercritical";
  }
  return "unknown";
}

double expected_log(const Vector& weights, const Vector& means) {
  double acc = 0.0;
  for (Index e = 0; e < weights.size(); ++e) {
    if (weights[e] <= 0.0) continue;
    if (!(means[e] > 0.0)) return kNegInf;
    acc += weights[e] * std::log(means[e]);
  }
  return acc;
}

double growth_rate(const Vector& p, const FitnessLandscape& landscape, const Vector& weights) {
  check_dimensions(p, landscape, weights);
  return expected_log(weights, mixed_mean(p, landscape));
}

Vector simplex_gradient(const Vector& p, const FitnessLandscape& landscape, const Vector& weights) {
  check_dimensions(p, landscape, weights);
  const Vector mp = mixed_mean(p, landscape);
  Vector ratio = Vector::Zero(weights.size());
  for (Index e = 0; e < weights.size(); ++e) {
    if (weights[e] <= 0.0) continue;
    if (!(mp[e] > 0.0)) throw std::domain_error("simplex_gradient: gamma is -infinity at p");
    ratio[e] = weights[e] / mp[e];
  }
  return landscape.mean() * ratio - Vector::Ones(p.size());
}

GrowthReport gamma_no_sensing(const Vector& p, const FitnessLandscape& landscape, const FiniteEnv& env) {
  GrowthReport r;
  r.rate = growth_rate(p, landscape, env.marginal());
  return r;
}

GrowthReport gamma_no_sensing(const GaussianStrategy& p, const GaussianLandscape& landscape,
                              const GaussianAR1Env& env) {
  validate(landscape);
  if (p.variance < 0.0) throw std::domain_error("gaussian strategy: variance must be >= 0");
  const double v = landscape.width_sq + p.variance;
  const double d = env.mean() - p.mean;
  GrowthReport r;
  r.rate = std::log(landscape.scale) - 0.5 * std::log(2.0 * std::numbers::pi * v) - (d * d + env.variance()) / (2.0 * v);
  return r;
}

double sensing_growth_rate(const Matrix& by_state, const FitnessLandscape& landscape, const Matrix& pair_law) {
  if (by_state.rows() != landscape.traits()) throw std::domain_error("sensing strategy: wrong number of traits");
  if (by_state.cols() != pair_law.rows()) throw std::domain_error("sensing strategy: missing p_e for some state");
  double acc = 0.0;
  for (Index e1 = 0; e1 < pair_law.rows(); ++e1) {
    const double part = expected_log(pair_law.row(e1).transpose(), mixed_mean(by_state.col(e1), landscape));
    if (part == kNegInf) return kNegInf;
    acc += part;
  }
  return acc;
}

GrowthReport gamma_sensing(const Matrix& by_state, const FitnessLandscape& landscape, const FiniteEnv& env) {
  if (landscape.environments() != env.size()) throw std::domain_error("environment and landscape disagree");
  GrowthReport r;
  r.rate = sensing_growth_rate(by_state, landscape, env.pair_law());
  return r;
}

GrowthReport gamma_sensing(const GaussianSensingStrategy& pbar, const GaussianLandscape& landscape,
                           const GaussianAR1Env& env) {
  validate(landscape);
  if (pbar.variance < 0.0) throw std::domain_error("gaussian strategy: variance must be >= 0");
  const double v = landscape.width_sq + pbar.variance;
  // e2 - intercept - slope e1 = bias + (rho - slope)(e1 - mu) + innovation
  const double bias = env.mean() - pbar.intercept - pbar.slope * env.mean();
  const double rho = env.rho();
  const double s2 = env.variance();
  const double second_moment = bias * bias + (rho - pbar.slope) * (rho - pbar.slope) * s2 + (1.0 - rho * rho) * s2;
  GrowthReport r;
  r.rate = std::log(landscape.scale) - 0.5 * std::log(2.0 * std::numbers::pi * v) - second_moment / (2.0 * v);
  return r;
}

Regime classify(double rate, double tol) {
  if (rate < -tol) return Regime::Subcritical;
  if (rate > tol) return Regime::Supercritical;
  return Regime::Critical;
}

Classification classify(double rate, const Vector& p, const FitnessLandscape& landscape, const FiniteEnv& env,
                        OffspringFamily family, double tol) {
  check_dimensions(p, landscape, env.marginal());
  Classification c;
  c.regime = classify(rate, tol);
  for (Index e = 0; e < env.size(); ++e) {
    if (env.marginal()[e] <= 0.0) continue;
    double zero_mass = 0.0;
    for (Index t = 0; t < p.size(); ++t) zero_mass += p[t] * zero_offspring_probability(family, landscape(t, e));
    if (!(zero_mass < 1.0)) c.moment_condition = false;
  }
  return c;
}

GrowthReport gamma_ergodic_mc(const Strategy& strategy, const FitnessLandscape& landscape, const FiniteEnv& env,
                              Index n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("ergodic estimator: n must be at least 1");
  if (strategy.is_hereditary()) throw std::invalid_argument("ergodic estimator: hereditary strategies have no closed rate");
  strategy.validate(landscape.traits(), landscape.environments());
  if (env.size() != landscape.environments()) throw std::domain_error("environment and landscape disagree");

  // Precompute log m_{p_{e1}, e2} for every pair.
  Matrix log_mean(env.size(), env.size());
  for (Index e1 = 0; e1 < env.size(); ++e1) {
    const Vector mp = mixed_mean(strategy.child_law(0, e1), landscape);
    for (Index e2 = 0; e2 < env.size(); ++e2) log_mean(e1, e2) = mp[e2] > 0.0 ? std::log(mp[e2]) : kNegInf;
  }

  const FinitePath path = sample_path(env, n + 1, seed);
  constexpr Index kBatches = 20;
  const Index batch = n >= 2 * kBatches ? n / kBatches : 1;
  MeanAccumulator batches;
  double total = 0.0;
  double batch_sum = 0.0;
  Index in_batch = 0;
  for (Index k = 1; k <= n; ++k) {
    const double term = log_mean(path[k - 1], path[k]);
    if (term == kNegInf) {
      GrowthReport r;
      r.rate = kNegInf;
      r.method = GrowthMethod::ErgodicMC;
      r.horizon = n;
      return r;
    }
    total += term;
    batch_sum += term;
    if (++in_batch == batch) {
      batches.add(batch_sum / static_cast<double>(batch));
      batch_sum = 0.0;
      in_batch = 0;
    }
  }
  GrowthReport r;
  r.rate = total / static_cast<double>(n);
  r.method = GrowthMethod::ErgodicMC;
  r.std_error = batches.standard_error();
  r.horizon = n;
  return r;
}

LineageChain sample_chain(const TraitKernel& kernel, const Vector& pi0, const FitnessLandscape& landscape,
                          const FinitePath& omega, Index n, Rng& rng) {
  check_hereditary_inputs(kernel, pi0, landscape, omega, n);
  LineageChain chain;
  ChainSampler(kernel, pi0).draw(omega, n, rng, chain.path);
  chain.weight = path_weight(chain.path, landscape, omega, n);
  return chain;
}

void for_each_path(const TraitKernel& kernel, const Vector& pi0, const FitnessLandscape& landscape,
                   const FinitePath& omega, Index n,
                   const std::function<void(const std::vector<Index>&, double, double)>& visit) {
  check_hereditary_inputs(kernel, pi0, landscape, omega, n);
  const Index q = landscape.traits();
  if (std::pow(static_cast<double>(q), static_cast<double>(n + 1)) > kMaxEnumeratedPaths) {
    throw std::domain_error("path enumeration: more than 1e6 paths");
  }
  std::vector<Index> path(static_cast<std::size_t>(n + 1), 0);
  while (true) {
    double prob = pi0[path[0]];
    double weight = 1.0;
    for (Index k = 0; k < n && prob > 0.0; ++k) {
      const auto tk = path[static_cast<std::size_t>(k)];
      prob *= kernel[static_cast<std::size_t>(omega[k])](tk, path[static_cast<std::size_t>(k + 1)]);
      weight *= landscape(tk, omega[k]);
    }
    if (prob > 0.0) visit(path, prob, weight);
    // Odometer increment.
    Index pos = n;
    while (pos >= 0 && ++path[static_cast<std::size_t>(pos)] == q) {
      path[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
}

GrowthReport gamma_hereditary(const TraitKernel& kernel, const Vector& pi0, const FitnessLandscape& landscape,
                              const FinitePath& omega, Index n, std::int64_t samples, std::uint64_t seed,
                              unsigned threads) {
  check_hereditary_inputs(kernel, pi0, landscape, omega, n);
  const ChainSampler sampler(kernel, pi0);
  const auto acc = accumulate_blocks(samples, seed, threads, [&](Rng& rng, std::vector<Index>& path) {
    sampler.draw(omega, n, rng, path);
    return path_weight(path, landscape, omega, n);
  });
  return report_from_weights(acc, n, GrowthMethod::MonteCarlo);
}

GrowthReport gamma_hereditary_enumerated(const TraitKernel& kernel, const Vector& pi0,
                                         const FitnessLandscape& landscape, const FinitePath& omega, Index n) {
  double mean = 0.0;
  for_each_path(kernel, pi0, landscape, omega, n,
                [&](const std::vector<Index>&, double prob, double weight) { mean += prob * weight; });
  GrowthReport r;
  r.method = GrowthMethod::PathEnumeration;
  r.horizon = n;
  if (!(mean > 0.0)) {
    r.rate = kNegInf;
    r.all_weights_zero = true;
  } else {
    r.rate = std::log(mean) / static_cast<double>(n);
  }
  return r;
}

double gamma_jensen_bound(const TraitKernel& kernel, const Vector& pi0, const FitnessLandscape& landscape,
                          const FinitePath& omega, Index n) {
  check_hereditary_inputs(kernel, pi0, landscape, omega, n);
  Vector law = pi0;
  double acc = 0.0;
  for (Index k = 0; k < n; ++k) {
    const Index e = omega[k];
    const double term = expected_log(law, landscape.mean().col(e));
    if (term == kNegInf) return kNegInf;
    acc += term;
    law = kernel[static_cast<std::size_t>(e)].transpose() * law;
  }
  return acc / static_cast<double>(n);
}

TraitKernel kernel_density(const TraitKernel& kernel, const ReferenceKernel& ref) {
  if (kernel.size() != ref.kernel.size()) throw std::domain_error("reference kernel: wrong number of states");
  TraitKernel density;
  for (std::size_t e = 0; e < kernel.size(); ++e) {
    const Matrix& k = kernel[e];
    const Matrix& r = ref.kernel[e];
    if (k.rows() != r.rows() || k.cols() != r.cols()) throw std::domain_error("reference kernel: wrong shape");
    Matrix f = Matrix::Zero(k.rows(), k.cols());
    for (Index i = 0; i < k.rows(); ++i) {
      for (Index j = 0; j < k.cols(); ++j) {
        if (k(i, j) > 0.0) {
          if (!(r(i, j) > 0.0)) throw std::domain_error("reference kernel: pi is not absolutely continuous w.r.t. ref");
          f(i, j) = k(i, j) / r(i, j);
        }
      }
    }
    density.push_back(std::move(f));
  }
  return density;
}

GrowthReport gamma_importance_sampled(const TraitKernel& kernel, const ReferenceKernel& ref, const Vector& pi0,
                                      const FitnessLandscape& landscape, const FinitePath& omega, Index n,
                                      std::int64_t samples, std::uint64_t seed, unsigned threads) {
  check_hereditary_inputs(kernel, pi0, landscape, omega, n);
  check_hereditary_inputs(ref.kernel, pi0, landscape, omega, n);
  const TraitKernel density = kernel_density(kernel, ref);
  const ChainSampler sampler(ref.kernel, pi0);
  const auto acc = accumulate_blocks(samples, seed, threads, [&](Rng& rng, std::vector<Index>& path) {
    sampler.draw(omega, n, rng, path);
    double w = 1.0;
    for (Index k = 0; k < n; ++k) {
      const auto t = path[static_cast<std::size_t>(k)];
      w *= landscape(t, omega[k]) * density[static_cast<std::size_t>(omega[k])](t, path[static_cast<std::size_t>(k + 1)]);
    }
    return w;
  });
  return report_from_weights(acc, n, GrowthMethod::ImportanceSampled);
}

}  // namespace mbpre
