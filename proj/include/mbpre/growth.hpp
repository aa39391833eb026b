#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "mbpre/env.hpp"
#include "mbpre/model.hpp"

namespace mbpre {

enum class GrowthMethod { Exact, ErgodicMC, PathEnumeration, MonteCarlo, ImportanceSampled };

std::string_view to_string(GrowthMethod method);

// Per-generation log growth rate. A rate of -infinity is a genuine value
// (some environment with positive mass kills every lineage).
struct GrowthReport {
  double rate = 0.0;
  GrowthMethod method = GrowthMethod::Exact;
  double std_error = 0.0;
  std::optional<Index> horizon;
  bool all_weights_zero = false;
};

// sum_e w_e log m_e; -infinity as soon as some m_e == 0 carries weight.
double expected_log(const Vector& weights, const Vector& means);

// gamma(p) = sum_e w_e log m_{p,e} for environment weights w.
double growth_rate(const Vector& p, const FitnessLandscape& landscape, const Vector& weights);

// Directional derivatives of gamma toward each vertex delta_t:
// sum_e w_e (m_{t,e} - m_{p,e}) / m_{p,e}.
Vector simplex_gradient(const Vector& p, const FitnessLandscape& landscape, const Vector& weights);

GrowthReport gamma_no_sensing(const Vector& p, const FitnessLandscape& landscape, const FiniteEnv& env);
GrowthReport gamma_no_sensing(const GaussianStrategy& p, const GaussianLandscape& landscape,
                              const GaussianAR1Env& env);

// gamma(pbar) = sum_{e1,e2} nu2(e1,e2) log m_{p_{e1},e2}.
double sensing_growth_rate(const Matrix& by_state, const FitnessLandscape& landscape, const Matrix& pair_law);
GrowthReport gamma_sensing(const Matrix& by_state, const FitnessLandscape& landscape, const FiniteEnv& env);
GrowthReport gamma_sensing(const GaussianSensingStrategy& pbar, const GaussianLandscape& landscape,
                           const GaussianAR1Env& env);

enum class Regime { Subcritical, Critical, Supercritical };

std::string_view to_string(Regime regime);

struct Classification {
  Regime regime = Regime::Critical;
  // E[-log(1 - Upsilon_{p,omega_0}({0}))] < infinity for the chosen family.
  bool moment_condition = true;
};

Regime classify(double rate, double tol = 1e-9);
Classification classify(double rate, const Vector& p, const FitnessLandscape& landscape, const FiniteEnv& env,
                        OffspringFamily family, double tol = 1e-9);

// Ergodic average of log m along one sampled environment path of length n + 1:
// n^{-1} sum_{k=1..n} log m_{p,omega_k} (sensing: m_{p_{omega_{k-1}},omega_k}).
// The standard error comes from batch means.
GrowthReport gamma_ergodic_mc(const Strategy& strategy, const FitnessLandscape& landscape, const FiniteEnv& env,
                              Index n, std::uint64_t seed);

// kernel[e](t, t') = pi_{t,e}(t').
using TraitKernel = std::vector<Matrix>;

struct LineageChain {
  std::vector<Index> path;  // T_0 .. T_n
  double weight = 0.0;      // M_n = prod_{k<n} m_{T_k, omega_k}
};

// Draws chains T_0 ~ pi0, T_{k+1} ~ kernel[omega_k](T_k, .) from precomputed
// tables. Inputs are assumed validated.
class ChainSampler {
 public:
  ChainSampler(const TraitKernel& kernel, const Vector& pi0);

  // Overwrites `path` with T_0 .. T_n.
  void draw(const FinitePath& omega, Index n, Rng& rng, std::vector<Index>& path) const;

 private:
  Categorical initial_;
  std::vector<std::vector<Categorical>> rows_;
};

// Throws unless the kernel, pi0 and omega fit the landscape over n steps.
void check_hereditary_inputs(const TraitKernel& kernel, const Vector& pi0, const FitnessLandscape& landscape,
                             const FinitePath& omega, Index n);

// M_n = prod_{k<n} m_{T_k,omega_k}.
double path_weight(const std::vector<Index>& path, const FitnessLandscape& landscape, const FinitePath& omega, Index n);

// One chain T from pi_0 and the kernel along omega, with its weight M_n.
LineageChain sample_chain(const TraitKernel& kernel, const Vector& pi0, const FitnessLandscape& landscape,
                          const FinitePath& omega, Index n, Rng& rng);

// Paths enumerated exactly only when |T|^{n+1} does not exceed this.
inline constexpr double kMaxEnumeratedPaths = 1e6;

// Visits every path in T^{n+1} with its probability under the chain and its weight M_n.
void for_each_path(const TraitKernel& kernel, const Vector& pi0, const FitnessLandscape& landscape,
                   const FinitePath& omega, Index n,
                   const std::function<void(const std::vector<Index>&, double probability, double weight)>& visit);

// gamma_n(omega, pi0) = n^{-1} log E[M_n] by Monte Carlo over `samples` chains.
GrowthReport gamma_hereditary(const TraitKernel& kernel, const Vector& pi0, const FitnessLandscape& landscape,
                              const FinitePath& omega, Index n, std::int64_t samples, std::uint64_t seed,
                              unsigned threads = default_threads());

// Exact gamma_n by path enumeration; throws std::domain_error past kMaxEnumeratedPaths.
GrowthReport gamma_hereditary_enumerated(const TraitKernel& kernel, const Vector& pi0,
                                         const FitnessLandscape& landscape, const FinitePath& omega, Index n);

// Jensen lower bound n^{-1} sum_k E[log m_{T_k,omega_k}], computed exactly from
// the marginal laws of T_k.
double gamma_jensen_bound(const TraitKernel& kernel, const Vector& pi0, const FitnessLandscape& landscape,
                          const FinitePath& omega, Index n);

// Proposal kernel for the change of measure pi = f * pi_ref.
struct ReferenceKernel {
  TraitKernel kernel;
};

// Density f_{t,e}(t') = pi_{t,e}(t') / ref_{t,e}(t'); throws std::domain_error
// when pi is not absolutely continuous with respect to ref.
TraitKernel kernel_density(const TraitKernel& kernel, const ReferenceKernel& ref);

// Unbiased estimate of E[M_n] from chains drawn under the reference kernel,
// weighted by prod m_{T_k,omega_k} f_{T_k,omega_k}(T_{k+1}).
GrowthReport gamma_importance_sampled(const TraitKernel& kernel, const ReferenceKernel& ref, const Vector& pi0,
                                      const FitnessLandscape& landscape, const FinitePath& omega, Index n,
                                      std::int64_t samples, std::uint64_t seed, unsigned threads = default_threads());

}  // namespace mbpre
