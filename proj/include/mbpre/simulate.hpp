#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mbpre/env.hpp"
#include "mbpre/model.hpp"
#include "mbpre/rng.hpp"

namespace mbpre {

inline constexpr std::int64_t kDefaultPopulationCap = 10'000'000;

struct PopulationState {
  std::vector<std::int64_t> counts;  // individuals per trait
  Index generation = 0;
  std::int64_t total = 0;            // sum of counts
  // log of the number of real individuals each simulated one stands for;
  // nonzero only after the population has been thinned to the cap.
  double log_scale = 0.0;

  // log |Z_n| including the thinning scale; -infinity once extinct.
  double log_size() const;
};

// Per generation: trait and parent index (into the previous generation) of
// every simulated individual. parents[0] is empty.
struct Genealogy {
  std::vector<std::vector<Index>> traits;
  std::vector<std::vector<std::int64_t>> parents;
};

struct SimulationRun {
  std::vector<PopulationState> trajectory;  // stops at the extinction generation
  std::optional<Index> extinct_at;
  bool capped = false;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> replicate;
  FinitePath env_path;
  std::optional<Genealogy> genealogy;

  const PopulationState& final_state() const { return trajectory.back(); }
  // Population at generation n, zero after extinction.
  PopulationState at(Index n) const;
};

struct SimulationOptions {
  Index generations = 1;
  std::int64_t roots = 1;
  std::int64_t cap = kDefaultPopulationCap;
  // Track every individual and its parent; needed for lineage sampling.
  bool record_genealogy = false;
};

// Generation 0: `roots` individuals with traits i.i.d. from the strategy's initial law.
PopulationState initial_population(const Strategy& strategy, std::int64_t roots, Rng& rng);

// One generation in state e_now: each individual of trait t has offspring
// drawn from the family with mean m_{t,e_now}; each child's trait follows
// the strategy's child law for (t, e_now). Above `cap` the children are
// thinned independently with keep probability cap / total.
PopulationState step(const PopulationState& state, const Strategy& strategy, OffspringFamily family,
                     const FitnessLandscape& landscape, Index e_now, Rng& rng,
                     std::int64_t cap = kDefaultPopulationCap);

// Simulates options.generations generations along a path sampled from env.
SimulationRun run(const Strategy& strategy, OffspringFamily family, const FitnessLandscape& landscape,
                  const FiniteEnv& env, const SimulationOptions& options, std::uint64_t seed);

// Same, along a fixed path (needs at least options.generations states).
SimulationRun run_on_path(const Strategy& strategy, OffspringFamily family, const FitnessLandscape& landscape,
                          const FinitePath& path, const SimulationOptions& options, std::uint64_t seed);

// Replicate r uses stream Rng(seed).split(r): outputs do not depend on `threads`.
std::vector<SimulationRun> run_replicates(const Strategy& strategy, OffspringFamily family,
                                          const FitnessLandscape& landscape, const FiniteEnv& env,
                                          const SimulationOptions& options, std::int64_t replicates,
                                          std::uint64_t seed, unsigned threads = default_threads());
std::vector<SimulationRun> run_replicates_on_path(const Strategy& strategy, OffspringFamily family,
                                                  const FitnessLandscape& landscape, const FinitePath& path,
                                                  const SimulationOptions& options, std::int64_t replicates,
                                                  std::uint64_t seed, unsigned threads = default_threads());

// E_omega |Z_n| = N0 m_{pi0,omega_0} prod_{k=1}^{n-1} m_{p_{omega_{k-1}},omega_k}
// for non-hereditary strategies.
double expected_population(const Strategy& strategy, const FitnessLandscape& landscape, const FinitePath& path,
                           std::int64_t roots, Index n);

struct LineageRecord {
  std::vector<Index> traits;  // t_0 .. t_n, root first
};

// Trait path of a uniformly chosen individual of the last generation;
// nullopt when that generation is empty. Throws std::logic_error if the run
// did not record its genealogy.
std::optional<LineageRecord> sample_lineage(const SimulationRun& run, Rng& rng);

// Exact law of sample_lineage's coordinates given the run: marginal i is the
// share of last-generation individuals whose generation-i ancestor has each trait.
std::optional<std::vector<Vector>> lineage_marginals(const SimulationRun& run, Index traits);

struct CompositionReport {
  double statistic = 0.0;
  Index dof = 0;
  double p_value = 1.0;
  bool passed = true;
  bool inconclusive = false;
  Index replicates_used = 0;
  Index uniforms = 0;
};

// Given |Z_n| the counts at generation n are multinomial with weights p
// (p_{omega_{n-1}} with sensing). Each surviving replicate contributes
// randomized PIT values of a sequential binomial decomposition; these are
// checked for uniformity with a chi-squared test over `bins` cells.
CompositionReport composition_given_size(const std::vector<SimulationRun>& runs, const Strategy& strategy,
                                         Index n, std::uint64_t seed, double level = 0.01, Index bins = 10);

}  // namespace mbpre
