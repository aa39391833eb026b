#include "mbpre/genealogy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace mbpre {

namespace {

Vector biased(const Vector& law, const FitnessLandscape& landscape, Index e) {
  const Vector w = law.cwiseProduct(landscape.mean().col(e));
  const double z = w.sum();
  if (!(z > 0.0)) throw std::domain_error("genealogy: every trait has zero weight in some generation");
  return w / z;
}

}  // namespace

ProductGenealogyLaw product_genealogy(const Strategy& strategy, const FitnessLandscape& landscape,
                                      const FinitePath& omega, Index n) {
  if (strategy.is_hereditary()) throw std::invalid_argument("product_genealogy: strategy must be non-hereditary");
  strategy.validate(landscape.traits(), landscape.environments());
  if (n < 1) throw std::invalid_argument("product_genealogy: n must be >= 1");
  if (omega.size() < n) throw std::invalid_argument("product_genealogy: environment path shorter than n");
  for (Index k = 0; k < n; ++k) {
    if (omega[k] < 0 || omega[k] >= landscape.environments()) throw std::domain_error("product_genealogy: bad state");
  }
  ProductGenealogyLaw law;
  law.marginals.reserve(static_cast<std::size_t>(n + 1));
  law.marginals.push_back(biased(strategy.initial(), landscape, omega[0]));
  for (Index i = 1; i < n; ++i) law.marginals.push_back(biased(strategy.child_law(0, omega[i - 1]), landscape, omega[i]));
  law.marginals.push_back(strategy.child_law(0, omega[n - 1]));
  return law;
}

GaussianGenealogyLaw gaussian_genealogy(const HereditaryGenealogyKernel& kernel, const GaussianLandscape& landscape,
                                        const RealPath& omega, Index n) {
  validate(landscape);
  if (n < 1) throw std::invalid_argument("gaussian_genealogy: n must be >= 1");
  if (omega.size() < n) throw std::invalid_argument("gaussian_genealogy: environment path shorter than n");
  if (!kernel.transition) throw std::invalid_argument("gaussian_genealogy: missing transition");
  if (!(kernel.initial_variance > 0.0)) throw std::domain_error("gaussian_genealogy: initial variance must be > 0");
  const Index dim = n + 1;
  const double width = landscape.width_sq;

  GaussianGenealogyLaw out;
  out.intercepts.resize(dim);
  out.variances.resize(dim);
  out.lower = Matrix::Zero(dim, dim);
  out.selection = Vector::Ones(dim);
  out.selection[n] = 0.0;
  out.targets = Vector::Zero(dim);
  out.intercepts[0] = kernel.initial_mean;
  out.variances[0] = kernel.initial_variance;
  for (Index k = 0; k < n; ++k) {
    const auto step = kernel.transition(omega[k]);
    if (!(step.variance > 0.0)) throw std::domain_error("gaussian_genealogy: transition variance must be > 0");
    out.intercepts[k + 1] = step.intercept;
    out.variances[k + 1] = step.variance;
    out.lower(k + 1, k) = step.slope;
    out.targets[k] = omega[k];
  }

  // unit = I - lower is unit lower bidiagonal.
  const Matrix unit = Matrix::Identity(dim, dim) - out.lower;
  const auto tri = unit.triangularView<Eigen::UnitLower>();
  out.prior_mean = tri.solve(out.intercepts);
  const Matrix unit_inv = tri.solve(Matrix::Identity(dim, dim));
  out.prior_covariance = unit_inv * out.variances.asDiagonal() * unit_inv.transpose();

  const Eigen::SelfAdjointEigenSolver<Matrix> spectrum(out.prior_covariance, Eigen::EigenvaluesOnly);
  const double lo = spectrum.eigenvalues().minCoeff();
  const double hi = spectrum.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12) throw std::domain_error("gaussian_genealogy: prior covariance is ill-conditioned");

  const Vector inv_var = out.variances.cwiseInverse();
  const Matrix prior_precision = unit.transpose() * inv_var.asDiagonal() * unit;
  Matrix precision = prior_precision;
  precision.diagonal() += out.selection / width;
  const Eigen::LLT<Matrix> chol(precision);
  if (chol.info() != Eigen::Success) throw std::domain_error("gaussian_genealogy: posterior precision not positive definite");

  const Vector linear = unit.transpose() * inv_var.cwiseProduct(out.intercepts) + out.targets / width;
  out.mean = chol.solve(linear);
  out.covariance = chol.solve(Matrix::Identity(dim, dim));

  const double log_det_prior = out.variances.array().log().sum();
  const double log_det_precision = 2.0 * chol.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double quad = linear.dot(out.mean) - out.intercepts.dot(inv_var.cwiseProduct(out.intercepts)) -
                      out.targets.squaredNorm() / width;
  const double nd = static_cast<double>(n);
  const double log_peak = std::log(landscape.scale) - 0.5 * std::log(2.0 * std::numbers::pi * width);
  out.rate = log_peak + (-0.5 * (log_det_prior + log_det_precision) + 0.5 * quad) / nd;
  return out;
}

GenealogyMarginals hereditary_genealogy_exact(const TraitKernel& kernel, const Vector& pi0,
                                              const FitnessLandscape& landscape, const FinitePath& omega, Index n) {
  check_hereditary_inputs(kernel, pi0, landscape, omega, n);
  const auto dim = static_cast<std::size_t>(n + 1);
  // forward[k](t) proportional to E[M_k 1{T_k = t}]; backward[k](t) proportional
  // to E[M_n / M_k | T_k = t]. Each is rescaled to sum one; logs of the scales kept.
  std::vector<Vector> forward(dim), backward(dim);
  double log_forward = 0.0;
  forward[0] = pi0;
  for (Index k = 0; k < n; ++k) {
    const Index e = omega[k];
    Vector next = kernel[static_cast<std::size_t>(e)].transpose() * forward[static_cast<std::size_t>(k)].cwiseProduct(landscape.mean().col(e));
    const double z = next.sum();
    if (!(z > 0.0)) throw std::domain_error("hereditary genealogy: every path has zero weight");
    log_forward += std::log(z);
    forward[static_cast<std::size_t>(k + 1)] = next / z;
  }
  backward[dim - 1] = Vector::Ones(landscape.traits());
  for (Index k = n; k-- > 0;) {
    const Index e = omega[k];
    Vector prev = landscape.mean().col(e).cwiseProduct(kernel[static_cast<std::size_t>(e)] * backward[static_cast<std::size_t>(k + 1)]);
    const double z = prev.maxCoeff();
    backward[static_cast<std::size_t>(k)] = z > 0.0 ? Vector(prev / z) : prev;
  }
  GenealogyMarginals out;
  out.log_mean_weight = log_forward;
  for (std::size_t k = 0; k < dim; ++k) {
    Vector m = forward[k].cwiseProduct(backward[k]);
    out.marginals.push_back(m / m.sum());
  }
  return out;
}

WeightedPathSample hereditary_genealogy_mc(const TraitKernel& kernel, const Vector& pi0,
                                           const FitnessLandscape& landscape, const FinitePath& omega, Index n,
                                           std::int64_t samples, std::uint64_t seed, unsigned threads,
                                           bool keep_paths) {
  check_hereditary_inputs(kernel, pi0, landscape, omega, n);
  if (samples < 1) throw std::invalid_argument("hereditary_genealogy_mc: need at least one sample");
  const Index q = landscape.traits();
  const auto total = static_cast<std::size_t>(samples);
  const std::size_t blocks = block_count(total);

  struct Partial {
    double sum_w = 0.0;
    double sum_w2 = 0.0;
    Matrix hit_w;   // (n+1) x q sums of w 1{T_i = t}
    Matrix hit_w2;  // same with w^2
  };
  std::vector<Partial> partial(blocks);
  WeightedPathSample out;
  out.samples = samples;
  if (keep_paths) {
    out.paths.resize(samples, n + 1);
    out.weights.resize(samples);
  }
  const ChainSampler sampler(kernel, pi0);
  const Rng root(seed);
  parallel_blocks(blocks, threads, [&](std::size_t b) {
    Rng rng = root.split(b);
    Partial& acc = partial[b];
    acc.hit_w = Matrix::Zero(n + 1, q);
    acc.hit_w2 = Matrix::Zero(n + 1, q);
    std::vector<Index> path;
    const std::size_t end = std::min(total, (b + 1) * kBlockSize);
    for (std::size_t s = b * kBlockSize; s < end; ++s) {
      sampler.draw(omega, n, rng, path);
      const double w = path_weight(path, landscape, omega, n);
      acc.sum_w += w;
      acc.sum_w2 += w * w;
      for (Index i = 0; i <= n; ++i) {
        acc.hit_w(i, path[static_cast<std::size_t>(i)]) += w;
        acc.hit_w2(i, path[static_cast<std::size_t>(i)]) += w * w;
      }
      if (keep_paths) {
        const auto row = static_cast<Index>(s);
        for (Index i = 0; i <= n; ++i) out.paths(row, i) = path[static_cast<std::size_t>(i)];
        out.weights[row] = w;
      }
    }
  });

  double sum_w = 0.0, sum_w2 = 0.0;
  Matrix hit_w = Matrix::Zero(n + 1, q), hit_w2 = Matrix::Zero(n + 1, q);
  for (const auto& p : partial) {
    sum_w += p.sum_w;
    sum_w2 += p.sum_w2;
    hit_w += p.hit_w;
    hit_w2 += p.hit_w2;
  }
  if (!(sum_w > 0.0)) throw std::domain_error("hereditary_genealogy_mc: all path weights are zero");
  out.mean_weight = sum_w / static_cast<double>(samples);
  out.effective_sample_size = sum_w * sum_w / sum_w2;
  for (Index i = 0; i <= n; ++i) {
    Vector est = hit_w.row(i).transpose() / sum_w;
    Vector se(q);
    for (Index t = 0; t < q; ++t) {
      // sum_s w_s^2 (1{T_i = t} - est)^2
      const double spread = hit_w2(i, t) * (1.0 - 2.0 * est[t]) + est[t] * est[t] * sum_w2;
      se[t] = std::sqrt(std::max(spread, 0.0)) / sum_w;
    }
    out.marginals.push_back(std::move(est));
    out.std_errors.push_back(std::move(se));
  }
  if (keep_paths) out.weights /= sum_w;
  return out;
}

std::optional<double> lineage_distance(const SimulationRun& run, const std::vector<Vector>& exact) {
  if (exact.empty()) throw std::invalid_argument("lineage_distance: empty exact law");
  const auto empirical = lineage_marginals(run, exact.front().size());
  if (!empirical) return std::nullopt;
  if (empirical->size() != exact.size()) throw std::invalid_argument("lineage_distance: horizons differ");
  double worst = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) worst = std::max(worst, total_variation((*empirical)[i], exact[i]));
  return worst;
}

}  // namespace mbpre
