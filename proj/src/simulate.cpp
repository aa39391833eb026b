#include "mbpre/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "mbpre/stats.hpp"

namespace mbpre {

namespace {

void check_run_inputs(const Strategy& strategy, const FitnessLandscape& landscape, const FinitePath& path,
                      const SimulationOptions& options) {
  strategy.validate(landscape.traits(), landscape.environments());
  if (options.generations < 0) throw std::invalid_argument("simulation: generations must be >= 0");
  if (options.roots < 1) throw std::invalid_argument("simulation: need at least one root");
  if (options.cap < 1) throw std::invalid_argument("simulation: cap must be >= 1");
  if (path.size() < options.generations) throw std::invalid_argument("simulation: environment path too short");
  for (Index k = 0; k < options.generations; ++k) {
    if (path[k] < 0 || path[k] >= landscape.environments()) {
      throw std::domain_error("simulation: environment path leaves the state space");
    }
  }
}

std::vector<Categorical> child_samplers(const Strategy& strategy, Index e) {
  std::vector<Categorical> out;
  out.reserve(static_cast<std::size_t>(strategy.traits()));
  for (Index t = 0; t < strategy.traits(); ++t) out.emplace_back(strategy.child_law(t, e));
  return out;
}

PopulationState state_from_traits(const std::vector<Index>& traits, Index q, Index generation, double log_scale) {
  PopulationState s;
  s.counts.assign(static_cast<std::size_t>(q), 0);
  for (Index t : traits) ++s.counts[static_cast<std::size_t>(t)];
  s.generation = generation;
  s.total = static_cast<std::int64_t>(traits.size());
  s.log_scale = log_scale;
  return s;
}

// Individual-level generation used when the genealogy is recorded.
void step_individuals(const std::vector<Index>& parents, const Strategy& strategy, OffspringFamily family,
                      const FitnessLandscape& landscape, Index e_now, Rng& rng, std::int64_t cap,
                      std::vector<Index>& child_traits, std::vector<std::int64_t>& child_parents,
                      double& log_scale) {
  const auto samplers = child_samplers(strategy, e_now);
  child_traits.clear();
  child_parents.clear();
  for (std::size_t i = 0; i < parents.size(); ++i) {
    const Index t = parents[i];
    const std::int64_t kids = sample_offspring(family, landscape(t, e_now), rng);
    for (std::int64_t j = 0; j < kids; ++j) {
      child_traits.push_back(samplers[static_cast<std::size_t>(t)](rng));
      child_parents.push_back(static_cast<std::int64_t>(i));
    }
  }
  const auto born = static_cast<std::int64_t>(child_traits.size());
  if (born <= cap) return;
  std::vector<std::size_t> all(static_cast<std::size_t>(born));
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> keep;
  keep.reserve(static_cast<std::size_t>(cap));
  std::sample(all.begin(), all.end(), std::back_inserter(keep), cap, rng);
  std::vector<Index> traits;
  std::vector<std::int64_t> parent_index;
  traits.reserve(keep.size());
  parent_index.reserve(keep.size());
  for (auto k : keep) {
    traits.push_back(child_traits[k]);
    parent_index.push_back(child_parents[k]);
  }
  child_traits = std::move(traits);
  child_parents = std::move(parent_index);
  log_scale += std::log(static_cast<double>(born)) - std::log(static_cast<double>(cap));
}

SimulationRun simulate_from_root(const Strategy& strategy, OffspringFamily family, const FitnessLandscape& landscape,
                                 FinitePath path, const SimulationOptions& options, Rng root) {
  check_run_inputs(strategy, landscape, path, options);
  const Index q = landscape.traits();
  Rng rng = root.split(1);
  SimulationRun out;
  out.seed = root.seed();
  out.env_path = std::move(path);
  out.trajectory.reserve(static_cast<std::size_t>(options.generations + 1));

  if (!options.record_genealogy) {
    out.trajectory.push_back(initial_population(strategy, options.roots, rng));
    for (Index k = 0; k < options.generations && out.trajectory.back().total > 0; ++k) {
      auto next = step(out.trajectory.back(), strategy, family, landscape, out.env_path[k], rng, options.cap);
      out.capped = out.capped || next.log_scale != out.trajectory.back().log_scale;
      out.trajectory.push_back(std::move(next));
    }
  } else {
    Genealogy g;
    const Categorical initial(strategy.initial());
    std::vector<Index> roots(static_cast<std::size_t>(options.roots));
    for (auto& t : roots) t = initial(rng);
    g.traits.push_back(std::move(roots));
    g.parents.emplace_back();
    double log_scale = 0.0;
    out.trajectory.push_back(state_from_traits(g.traits.back(), q, 0, log_scale));
    for (Index k = 0; k < options.generations && out.trajectory.back().total > 0; ++k) {
      std::vector<Index> traits;
      std::vector<std::int64_t> parents;
      step_individuals(g.traits.back(), strategy, family, landscape, out.env_path[k], rng, options.cap, traits,
                       parents, log_scale);
      out.capped = out.capped || log_scale != out.trajectory.back().log_scale;
      out.trajectory.push_back(state_from_traits(traits, q, k + 1, log_scale));
      g.traits.push_back(std::move(traits));
      g.parents.push_back(std::move(parents));
    }
    out.genealogy = std::move(g);
  }
  if (out.trajectory.back().total == 0) out.extinct_at = out.trajectory.back().generation;
  return out;
}

double binomial_cdf_safe(std::int64_t k, std::int64_t n, double p) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return 0.0;
  return binomial_cdf(k, n, p);
}

double binomial_pmf_safe(std::int64_t k, std::int64_t n, double p) {
  if (k < 0 || k > n) return 0.0;
  if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return k == n ? 1.0 : 0.0;
  return binomial_pmf(k, n, p);
}

}  // namespace

double PopulationState::log_size() const {
  if (total <= 0) return -std::numeric_limits<double>::infinity();
  return std::log(static_cast<double>(total)) + log_scale;
}

PopulationState SimulationRun::at(Index n) const {
  if (n < 0) throw std::out_of_range("SimulationRun::at: negative generation");
  if (n < static_cast<Index>(trajectory.size())) return trajectory[static_cast<std::size_t>(n)];
  if (!extinct_at) throw std::out_of_range("SimulationRun::at: generation beyond the simulated horizon");
  PopulationState s = trajectory.back();
  s.generation = n;
  return s;
}

PopulationState initial_population(const Strategy& strategy, std::int64_t roots, Rng& rng) {
  if (roots < 0) throw std::invalid_argument("initial_population: negative root count");
  PopulationState s;
  s.counts = sample_multinomial(roots, strategy.initial(), rng);
  s.total = roots;
  return s;
}

PopulationState step(const PopulationState& state, const Strategy& strategy, OffspringFamily family,
                     const FitnessLandscape& landscape, Index e_now, Rng& rng, std::int64_t cap) {
  const Index q = landscape.traits();
  if (static_cast<Index>(state.counts.size()) != q) throw std::invalid_argument("step: state has the wrong trait count");
  if (e_now < 0 || e_now >= landscape.environments()) throw std::domain_error("step: environment state out of range");
  PopulationState next;
  next.generation = state.generation + 1;
  next.log_scale = state.log_scale;
  next.counts.assign(static_cast<std::size_t>(q), 0);
  if (state.total == 0) return next;

  auto add = [&](const std::vector<std::int64_t>& c) {
    for (std::size_t i = 0; i < c.size(); ++i) next.counts[i] += c[i];
  };
  if (strategy.is_hereditary()) {
    for (Index t = 0; t < q; ++t) {
      const auto n_t = state.counts[static_cast<std::size_t>(t)];
      if (n_t == 0) continue;
      const auto kids = sample_offspring_total(family, landscape(t, e_now), n_t, rng);
      add(sample_multinomial(kids, strategy.child_law(t, e_now), rng));
    }
  } else {
    std::int64_t kids = 0;
    for (Index t = 0; t < q; ++t) {
      kids += sample_offspring_total(family, landscape(t, e_now), state.counts[static_cast<std::size_t>(t)], rng);
    }
    add(sample_multinomial(kids, strategy.child_law(0, e_now), rng));
  }
  next.total = std::accumulate(next.counts.begin(), next.counts.end(), std::int64_t{0});

  if (next.total > cap) {
    const double keep = static_cast<double>(cap) / static_cast<double>(next.total);
    std::int64_t kept = 0;
    for (auto& c : next.counts) {
      c = c > 0 ? std::binomial_distribution<std::int64_t>(c, keep)(rng) : 0;
      kept += c;
    }
    if (kept > 0) next.log_scale += std::log(static_cast<double>(next.total)) - std::log(static_cast<double>(kept));
    next.total = kept;
  }
  return next;
}

SimulationRun run(const Strategy& strategy, OffspringFamily family, const FitnessLandscape& landscape,
                  const FiniteEnv& env, const SimulationOptions& options, std::uint64_t seed) {
  const Rng root(seed);
  Rng env_rng = root.split(0);
  return simulate_from_root(strategy, family, landscape, env.sample_path(options.generations, env_rng), options, root);
}

SimulationRun run_on_path(const Strategy& strategy, OffspringFamily family, const FitnessLandscape& landscape,
                          const FinitePath& path, const SimulationOptions& options, std::uint64_t seed) {
  return simulate_from_root(strategy, family, landscape, path, options, Rng(seed));
}

std::vector<SimulationRun> run_replicates(const Strategy& strategy, OffspringFamily family,
                                          const FitnessLandscape& landscape, const FiniteEnv& env,
                                          const SimulationOptions& options, std::int64_t replicates,
                                          std::uint64_t seed, unsigned threads) {
  if (replicates < 0) throw std::invalid_argument("run_replicates: negative replicate count");
  std::vector<SimulationRun> runs(static_cast<std::size_t>(replicates));
  const Rng base(seed);
  parallel_blocks(runs.size(), threads, [&](std::size_t r) {
    const Rng root = base.split(r);
    Rng env_rng = root.split(0);
    runs[r] = simulate_from_root(strategy, family, landscape, env.sample_path(options.generations, env_rng), options,
                                 root);
    runs[r].seed = seed;
    runs[r].replicate = r;
  });
  return runs;
}

std::vector<SimulationRun> run_replicates_on_path(const Strategy& strategy, OffspringFamily family,
                                                  const FitnessLandscape& landscape, const FinitePath& path,
                                                  const SimulationOptions& options, std::int64_t replicates,
                                                  std::uint64_t seed, unsigned threads) {
  if (replicates < 0) throw std::invalid_argument("run_replicates: negative replicate count");
  std::vector<SimulationRun> runs(static_cast<std::size_t>(replicates));
  const Rng base(seed);
  parallel_blocks(runs.size(), threads, [&](std::size_t r) {
    runs[r] = simulate_from_root(strategy, family, landscape, path, options, base.split(r));
    runs[r].seed = seed;
    runs[r].replicate = r;
  });
  return runs;
}

double expected_population(const Strategy& strategy, const FitnessLandscape& landscape, const FinitePath& path,
                           std::int64_t roots, Index n) {
  if (strategy.is_hereditary()) throw std::invalid_argument("expected_population: hereditary strategies not supported");
  if (n < 0 || path.size() < n) throw std::invalid_argument("expected_population: path shorter than n");
  double mean = static_cast<double>(roots);
  if (n == 0) return mean;
  mean *= mixed_mean(strategy.initial(), landscape, path[0]);
  for (Index k = 1; k < n; ++k) mean *= mixed_mean(strategy.child_law(0, path[k - 1]), landscape, path[k]);
  return mean;
}

std::optional<LineageRecord> sample_lineage(const SimulationRun& run, Rng& rng) {
  if (!run.genealogy) throw std::logic_error("sample_lineage: run did not record its genealogy");
  const auto& g = *run.genealogy;
  const auto& last = g.traits.back();
  if (last.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, last.size() - 1);
  auto idx = static_cast<std::int64_t>(pick(rng));
  LineageRecord rec;
  rec.traits.resize(g.traits.size());
  for (std::size_t gen = g.traits.size(); gen-- > 0;) {
    rec.traits[gen] = g.traits[gen][static_cast<std::size_t>(idx)];
    if (gen > 0) idx = g.parents[gen][static_cast<std::size_t>(idx)];
  }
  return rec;
}

std::optional<std::vector<Vector>> lineage_marginals(const SimulationRun& run, Index traits) {
  if (!run.genealogy) throw std::logic_error("lineage_marginals: run did not record its genealogy");
  const auto& g = *run.genealogy;
  if (g.traits.back().empty()) return std::nullopt;
  std::vector<Vector> marginals(g.traits.size(), Vector::Zero(traits));
  std::vector<double> weight(g.traits.back().size(), 1.0);
  const double total = static_cast<double>(weight.size());
  for (std::size_t gen = g.traits.size(); gen-- > 0;) {
    const auto& tr = g.traits[gen];
    for (std::size_t i = 0; i < tr.size(); ++i) marginals[gen][tr[i]] += weight[i] / total;
    if (gen == 0) break;
    std::vector<double> up(g.traits[gen - 1].size(), 0.0);
    for (std::size_t i = 0; i < tr.size(); ++i) up[static_cast<std::size_t>(g.parents[gen][i])] += weight[i];
    weight = std::move(up);
  }
  return marginals;
}

CompositionReport composition_given_size(const std::vector<SimulationRun>& runs, const Strategy& strategy, Index n,
                                         std::uint64_t seed, double level, Index bins) {
  if (strategy.is_hereditary()) throw std::invalid_argument("composition test: needs a non-hereditary strategy");
  if (n < 1) throw std::invalid_argument("composition test: n must be >= 1");
  if (bins < 2) throw std::invalid_argument("composition test: need at least two bins");
  Rng rng(seed);
  std::vector<std::int64_t> hist(static_cast<std::size_t>(bins), 0);
  CompositionReport report;
  for (const auto& r : runs) {
    if (r.env_path.size() < n) throw std::invalid_argument("composition test: run shorter than n");
    const PopulationState s = r.at(n);
    if (s.total == 0) continue;
    ++report.replicates_used;
    const Vector w = strategy.child_law(0, r.env_path[n - 1]);
    std::int64_t remaining = s.total;
    double mass = 1.0;
    for (Index t = 0; t + 1 < w.size() && remaining > 0; ++t) {
      const double p = mass > 0.0 ? std::clamp(w[t] / mass, 0.0, 1.0) : 0.0;
      const std::int64_t k = s.counts[static_cast<std::size_t>(t)];
      const double u = binomial_cdf_safe(k - 1, remaining, p) + rng.uniform() * binomial_pmf_safe(k, remaining, p);
      const auto bin = std::min<Index>(bins - 1, static_cast<Index>(u * static_cast<double>(bins)));
      ++hist[static_cast<std::size_t>(bin)];
      ++report.uniforms;
      remaining -= k;
      mass -= w[t];
    }
  }
  report.dof = bins - 1;
  if (report.replicates_used < 20 || report.uniforms < 5 * bins) {
    report.inconclusive = true;
    report.passed = false;
    return report;
  }
  const double expected = static_cast<double>(report.uniforms) / static_cast<double>(bins);
  for (auto h : hist) report.statistic += (static_cast<double>(h) - expected) * (static_cast<double>(h) - expected) / expected;
  report.p_value = chi_squared_sf(report.statistic, static_cast<double>(report.dof));
  report.passed = report.p_value >= level;
  return report;
}

}  // namespace mbpre
