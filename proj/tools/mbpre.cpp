// Command-line front end: optimize, scan, simulate, growth, genealogy, gaussian.
#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "mbpre/config.hpp"
#include "mbpre/gaussian.hpp"
#include "mbpre/genealogy.hpp"
#include "mbpre/growth.hpp"
#include "mbpre/io.hpp"
#include "mbpre/optimize.hpp"
#include "mbpre/simulate.hpp"
#include "mbpre/stats.hpp"

namespace {

using namespace mbpre;

constexpr int kExitUsage = 1;
constexpr int kExitNotConverged = 2;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  unsigned threads = default_threads();
  std::string out_dir;
  std::string format = "json";
};

struct ScanArgs {
  std::string parameter;
  std::optional<std::string> values;  // present but empty means an empty grid
};

Json load(const Globals& g) {
  if (g.config_path.empty()) throw ConfigError("--config is required for this command");
  return load_config(g.config_path);
}

std::uint64_t seed_of(const Globals& g, const Json& config, const char* section) {
  if (g.seed) return *g.seed;
  if (const Json* s = find_key(config, std::string(section) + ".seed")) {
    if (!s->is_number_unsigned() && !s->is_number_integer()) throw ConfigError("seed must be an integer");
    return s->get<std::uint64_t>();
  }
  return 1;
}

void write_file(const Globals& g, const std::string& name, const std::string& content) {
  if (g.out_dir.empty()) return;
  std::filesystem::create_directories(g.out_dir);
  const auto path = std::filesystem::path(g.out_dir) / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

// Prints the primary result in the requested format and mirrors it into --out.
void emit(const Globals& g, const std::string& stem, const Json& json, const std::string& csv) {
  if (g.format == "csv") {
    std::cout << csv;
    write_file(g, stem + ".csv", csv);
  } else {
    const auto text = json.dump(2) + "\n";
    std::cout << text;
    write_file(g, stem + ".json", text);
  }
}

std::string csv_from(const std::function<void(std::ostream&)>& fill) {
  std::ostringstream out;
  fill(out);
  return out.str();
}

bool polymorphism_required(const FitnessLandscape& landscape, const Vector& weights, double optimum) {
  double best_pure = -std::numeric_limits<double>::infinity();
  for (Index t = 0; t < landscape.traits(); ++t) {
    best_pure = std::max(best_pure, expected_log(weights, landscape.mean().row(t).transpose()));
  }
  return best_pure <= 0.0 && optimum > 0.0;
}

std::string strategy_csv(const OptimizationResult& r, const FitnessLandscape& landscape, const FiniteEnv& env) {
  return csv_from([&](std::ostream& out) {
    out << "state,trait,probability\n";
    if (const auto* s = std::get_if<Sensing>(&r.strategy.rule())) {
      for (Index e = 0; e < s->by_state.cols(); ++e) {
        for (Index t = 0; t < s->by_state.rows(); ++t) {
          out << env.states()[static_cast<std::size_t>(e)] << ',' << landscape.trait_labels()[static_cast<std::size_t>(t)]
              << ',' << format_double(s->by_state(t, e)) << '\n';
        }
      }
    } else {
      const Vector& p = r.distribution();
      for (Index t = 0; t < p.size(); ++t) {
        out << "all," << landscape.trait_labels()[static_cast<std::size_t>(t)] << ',' << format_double(p[t]) << '\n';
      }
    }
  });
}

GaussianProblem gaussian_problem_from(const Json& config) {
  const auto landscape = landscape_from_config(config);
  const auto env = environment_from_config(config);
  if (!landscape.gaussian || !env.gaussian) {
    throw ConfigError("gaussian commands need [landscape] kind = \"gaussian\" and [environment] kind = \"gaussian\"");
  }
  return {*landscape.gaussian, *env.gaussian};
}

Json gaussian_summary(const GaussianProblem& prob) {
  return {{"chi", prob.chi()},
          {"rho", prob.env.rho()},
          {"no_sensing", to_json(gaussian_optimal_no_sensing(prob))},
          {"sensing", to_json(gaussian_optimal_sensing(prob))},
          {"gain_mixed_over_pure", gaussian_gain_mixed_over_pure(prob)},
          {"gain_sensing_over_no_sensing", gaussian_gain_sensing_over_no_sensing(prob)}};
}

int cmd_optimize(const Globals& g) {
  const Json config = load(g);
  const Json* opt = find_key(config, "optimize");
  const bool sensing = opt && opt->value("sensing", false);
  const std::string method = opt ? opt->value("method", std::string("auto")) : "auto";
  const auto landscape_spec = landscape_from_config(config);

  if (landscape_spec.gaussian) {
    const auto prob = gaussian_problem_from(config);
    const Json out = gaussian_summary(prob);
    emit(g, "optimize", out, csv_from([&](std::ostream& o) {
           o << "quantity,value\n";
           o << "gamma_star," << format_double(out["no_sensing"]["rate"].get<double>()) << '\n';
           o << "gamma_star_star," << format_double(out["sensing"]["rate"].get<double>()) << '\n';
         }));
    return 0;
  }

  const FitnessLandscape landscape = *landscape_spec.finite;
  const FiniteEnv env = finite_environment_from_config(config);
  const SolverOptions options = solver_options_from_config(config);
  OptimizationResult result = [&] {
    if (sensing) return optimize_sensing(landscape, env, options);
    if (method == "closed_form") return optimize_2x2_closed_form(landscape, env, options);
    if (method != "auto" && method != "iterative") throw ConfigError("[optimize] unknown method '" + method + "'");
    return optimize_no_sensing(landscape, env, options);
  }();

  Json out = to_json(result);
  if (sensing) {
    Json parts = Json::array();
    for (const auto& part : result.per_state) parts.push_back(to_json(part));
    out["per_state"] = parts;
    out["no_sensing_rate"] = number_to_json(optimize_no_sensing(landscape, env, options).rate);
  } else {
    out["polymorphism_required"] = polymorphism_required(landscape, env.marginal(), result.rate);
  }
  emit(g, "optimize", out, strategy_csv(result, landscape, env));
  return result.converged ? 0 : kExitNotConverged;
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> values;
  if (text.empty()) return values;
  if (text.find(':') != std::string::npos) {
    double lo = 0, hi = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(text);
    if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0.0)) {
      throw ConfigError("grid must look like lo:hi:step");
    }
    const auto n = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
    for (long i = 0; i <= n; ++i) values.push_back(lo + static_cast<double>(i) * step);
    return values;
  }
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError("grid value '" + item + "' is not a number");
    }
  }
  return values;
}

std::vector<double> grid_from_config(const Json& config) {
  const Json* scan = find_key(config, "scan");
  if (!scan) return {};
  if (scan->contains("values")) {
    std::vector<double> v;
    for (const auto& x : scan->at("values")) v.push_back(number_from_json(x));
    return v;
  }
  if (scan->contains("from")) {
    std::ostringstream spec;
    spec << number_from_json(scan->at("from")) << ':' << number_from_json(scan->at("to")) << ':'
         << number_from_json(scan->at("step"));
    return parse_grid(spec.str());
  }
  return {};
}

int cmd_scan(const Globals& g, const ScanArgs& args) {
  const Json config = load(g);
  std::string parameter = args.parameter;
  if (parameter.empty()) {
    if (const Json* p = find_key(config, "scan.parameter")) parameter = p->get<std::string>();
  }
  const auto values = args.values ? parse_grid(*args.values) : grid_from_config(config);
  const SolverOptions options = solver_options_from_config(config);

  Json rows = Json::array();
  std::ostringstream csv;
  bool all_converged = true;

  if (parameter == "q" || parameter == "q1" || parameter == "q2" || parameter == "nu1") {
    const FitnessLandscape landscape = finite_landscape_from_config(config);
    if (landscape.environments() != 2) throw ConfigError("scan over " + parameter + " needs two environment states");
    const Json* env_table = find_key(config, "environment");
    auto base = [&](const char* key, double fallback) {
      return env_table && env_table->contains(key) ? number_from_json(env_table->at(key)) : fallback;
    };
    const auto& traits = landscape.trait_labels();
    csv << "value,gamma_star,gamma_star_star";
    for (const auto& t : traits) csv << ",p_star_" << t;
    for (const auto& e : landscape.environment_labels()) {
      for (const auto& t : traits) csv << ",p_" << e << '_' << t;
    }
    csv << '\n';
    for (double v : values) {
      const FiniteEnv env = [&] {
        if (parameter == "nu1") {
          Vector nu(2);
          nu << v, 1.0 - v;
          return FiniteEnv::iid(nu);
        }
        const double q = base("q", 0.5);
        const double q1 = parameter == "q2" ? base("q1", q) : v;
        const double q2 = parameter == "q1" ? base("q2", q) : v;
        return FiniteEnv::two_state_markov(q1, q2);
      }();
      const auto plain = optimize_no_sensing(landscape, env, options);
      const auto sensed = optimize_sensing(landscape, env, options);
      all_converged = all_converged && plain.converged && sensed.converged;
      csv << format_double(v) << ',' << format_double(plain.rate) << ',' << format_double(sensed.rate);
      for (Index t = 0; t < landscape.traits(); ++t) csv << ',' << format_double(plain.distribution()[t]);
      for (Index e = 0; e < 2; ++e) {
        for (Index t = 0; t < landscape.traits(); ++t) csv << ',' << format_double(sensed.by_state()(t, e));
      }
      csv << '\n';
      rows.push_back({{"value", v},
                      {"gamma_star", number_to_json(plain.rate)},
                      {"gamma_star_star", number_to_json(sensed.rate)},
                      {"no_sensing", to_json(plain.strategy)},
                      {"sensing", to_json(sensed.strategy)}});
    }
  } else if (parameter == "chi" || parameter == "rho") {
    const auto prob = gaussian_problem_from(config);
    csv << "value,chi,rho,gamma_star,gamma_star_star,gain_mixed_over_pure,gain_sensing_over_no_sensing,"
           "p_star_variance,sensing_variance\n";
    for (double v : values) {
      const GaussianAR1Env env = parameter == "chi"
                                     ? GaussianAR1Env(prob.env.mean(), v * prob.landscape.width_sq, prob.env.rho())
                                     : GaussianAR1Env(prob.env.mean(), prob.env.variance(), v);
      const GaussianProblem p{prob.landscape, env};
      const auto plain = gaussian_optimal_no_sensing(p);
      const auto sensed = gaussian_optimal_sensing(p);
      csv << format_double(v) << ',' << format_double(p.chi()) << ',' << format_double(env.rho()) << ','
          << format_double(plain.rate) << ',' << format_double(sensed.rate) << ','
          << format_double(gaussian_gain_mixed_over_pure(p)) << ','
          << format_double(gaussian_gain_sensing_over_no_sensing(p)) << ','
          << format_double(plain.strategy.variance) << ',' << format_double(sensed.strategy.variance) << '\n';
      Json row = gaussian_summary(p);
      row["value"] = v;
      rows.push_back(row);
    }
  } else {
    throw ConfigError("unknown scan parameter '" + parameter + "' (expected q, q1, q2, nu1, chi or rho)");
  }
  emit(g, "scan", Json{{"parameter", parameter}, {"rows", rows}}, csv.str());
  return all_converged ? 0 : kExitNotConverged;
}

double closed_rate(const Strategy& strategy, const FitnessLandscape& landscape, const FiniteEnv& env) {
  if (const auto* r = std::get_if<NoSensing>(&strategy.rule())) return growth_rate(r->p, landscape, env.marginal());
  if (const auto* r = std::get_if<Sensing>(&strategy.rule())) {
    return sensing_growth_rate(r->by_state, landscape, env.pair_law());
  }
  return std::numeric_limits<double>::quiet_NaN();
}

int cmd_simulate(const Globals& g) {
  const Json config = load(g);
  const FitnessLandscape landscape = finite_landscape_from_config(config);
  const FiniteEnv env = finite_environment_from_config(config);
  const Strategy strategy = strategy_from_config(config, landscape.traits());
  const OffspringFamily family = family_from_config(config);
  SimulationOptions options = simulation_options_from_config(config);
  const std::int64_t replicates = replicates_from_config(config);
  const std::uint64_t seed = seed_of(g, config, "simulation");
  const auto lineages = static_cast<std::int64_t>(
      find_key(config, "simulation.lineages") ? find_key(config, "simulation.lineages")->get<std::int64_t>() : 0);
  if (lineages > 0) options.record_genealogy = true;

  const auto runs = find_key(config, "path.values")
                        ? run_replicates_on_path(strategy, family, landscape,
                                                 finite_path_from_config(config, env, options.generations, seed),
                                                 options, replicates, seed, g.threads)
                        : run_replicates(strategy, family, landscape, env, options, replicates, seed, g.threads);

  const Index n = options.generations;
  std::int64_t extinct = 0, capped = 0;
  MeanAccumulator growth;
  for (const auto& r : runs) {
    if (r.extinct_at) {
      ++extinct;
    } else if (n > 0) {
      growth.add(r.final_state().log_size() / static_cast<double>(n));
    }
    if (r.capped) ++capped;
  }
  const double count = static_cast<double>(std::max<std::int64_t>(replicates, 1));
  Json summary{{"replicates", replicates},
               {"generations", n},
               {"roots", options.roots},
               {"cap", options.cap},
               {"family", std::string(to_string(family))},
               {"seed", seed},
               {"extinction_fraction", static_cast<double>(extinct) / count},
               {"survival_fraction", static_cast<double>(replicates - extinct) / count},
               {"capped_runs", capped},
               {"theory_rate", number_to_json(closed_rate(strategy, landscape, env))}};
  if (growth.count() > 0) {
    const double se = growth.count() > 1 ? growth.standard_error() : 0.0;
    summary["conditional_growth"] = {{"mean", growth.mean()},
                                     {"std_error", se},
                                     {"ci95", {growth.mean() - 1.96 * se, growth.mean() + 1.96 * se}},
                                     {"survivors", growth.count()}};
  }

  write_file(g, "trajectories.csv", csv_from([&](std::ostream& o) { write_trajectory_csv(o, runs); }));
  Json per_run = Json::array();
  for (const auto& r : runs) per_run.push_back(summary_json(r));
  write_file(g, "runs.json", per_run.dump(2) + "\n");
  if (lineages > 0) {
    std::vector<LineageRecord> records;
    Rng rng = Rng(seed).split(0xC0FFEE);
    for (const auto& r : runs) {
      for (std::int64_t i = 0; i < lineages; ++i) {
        if (auto rec = sample_lineage(r, rng)) records.push_back(std::move(*rec));
      }
    }
    write_file(g, "lineages.csv", csv_from([&](std::ostream& o) { write_lineages_csv(o, records); }));
  }
  emit(g, "summary", summary, csv_from([&](std::ostream& o) { write_trajectory_csv(o, runs); }));
  return 0;
}

TraitKernel reference_kernel(const Json& spec, Index q, Index states) {
  TraitKernel ref;
  if (spec.is_string() && spec.get<std::string>() == "uniform") {
    for (Index e = 0; e < states; ++e) ref.push_back(Matrix::Constant(q, q, 1.0 / static_cast<double>(q)));
    return ref;
  }
  for (const auto& m : spec) ref.push_back(matrix_from_json(m));
  return ref;
}

int cmd_growth(const Globals& g) {
  const Json config = load(g);
  const Json* growth = find_key(config, "growth");
  const std::string method = growth ? growth->value("method", std::string("auto")) : "auto";
  const std::uint64_t seed = seed_of(g, config, "growth");
  const auto landscape_spec = landscape_from_config(config);
  const auto env_spec = environment_from_config(config);

  if (landscape_spec.gaussian) {
    if (!env_spec.gaussian) throw ConfigError("a gaussian landscape needs [environment] kind = \"gaussian\"");
    const Json& s = config.contains("strategy") ? config.at("strategy") : Json::object();
    const auto kind = s.value("kind", std::string("gaussian"));
    const GrowthReport report =
        kind == "gaussian_sensing"
            ? gamma_sensing(GaussianSensingStrategy{s.value("slope", 0.0), s.value("intercept", 0.0),
                                                    s.value("variance", 0.0)},
                            *landscape_spec.gaussian, *env_spec.gaussian)
            : gamma_no_sensing(GaussianStrategy{s.value("mean", 0.0), s.value("variance", 0.0)},
                               *landscape_spec.gaussian, *env_spec.gaussian);
    Json out = to_json(report);
    out["regime"] = std::string(to_string(classify(report.rate)));
    emit(g, "growth", out, "rate\n" + format_double(report.rate) + "\n");
    return 0;
  }

  const FitnessLandscape landscape = *landscape_spec.finite;
  if (!env_spec.finite) throw ConfigError("a finite landscape needs a finite environment");
  const FiniteEnv env = *env_spec.finite;
  const Strategy strategy = strategy_from_config(config, landscape.traits());
  strategy.validate(landscape.traits(), landscape.environments());

  if (!strategy.is_hereditary()) {
    GrowthReport report;
    if (method == "ergodic") {
      const auto horizon = growth ? growth->value("horizon", Index{10000}) : Index{10000};
      report = gamma_ergodic_mc(strategy, landscape, env, horizon, seed);
    } else if (method == "auto" || method == "exact") {
      report.rate = closed_rate(strategy, landscape, env);
    } else {
      throw ConfigError("[growth] method '" + method + "' needs a hereditary strategy");
    }
    Json out = to_json(report);
    if (const auto* r = std::get_if<NoSensing>(&strategy.rule())) {
      const auto c = classify(report.rate, r->p, landscape, env, family_from_config(config));
      out["regime"] = std::string(to_string(c.regime));
      out["moment_condition"] = c.moment_condition;
    } else {
      out["regime"] = std::string(to_string(classify(report.rate)));
    }
    emit(g, "growth", out, "method,rate,std_error\n" + std::string(to_string(report.method)) + "," +
                               format_double(report.rate) + "," + format_double(report.std_error) + "\n");
    return 0;
  }

  const auto& kernel = std::get<Hereditary>(strategy.rule()).kernel;
  const Index n = growth ? growth->value("horizon", Index{10}) : Index{10};
  const std::int64_t samples = growth ? growth->value("samples", std::int64_t{100000}) : 100000;
  const FinitePath omega = finite_path_from_config(config, env, n, seed);
  const Vector& pi0 = strategy.initial();

  Json out{{"horizon", n}, {"path", omega.values}};
  std::ostringstream csv;
  csv << "method,rate,std_error\n";
  auto record = [&](const std::string& name, const GrowthReport& r) {
    out[name] = to_json(r);
    csv << name << ',' << format_double(r.rate) << ',' << format_double(r.std_error) << '\n';
  };
  if (method == "auto" || method == "monte_carlo") {
    record("monte_carlo", gamma_hereditary(kernel, pi0, landscape, omega, n, samples, seed, g.threads));
  }
  const bool small = std::pow(static_cast<double>(landscape.traits()), static_cast<double>(n + 1)) <= kMaxEnumeratedPaths;
  if (method == "enumerate" || (method == "auto" && small)) {
    record("enumerated", gamma_hereditary_enumerated(kernel, pi0, landscape, omega, n));
  }
  if (method == "auto" || method == "jensen") {
    const double bound = gamma_jensen_bound(kernel, pi0, landscape, omega, n);
    out["jensen_bound"] = number_to_json(bound);
    csv << "jensen_bound," << format_double(bound) << ",0\n";
  }
  if (method == "importance") {
    if (!growth || !growth->contains("reference")) throw ConfigError("[growth] importance sampling needs 'reference'");
    const ReferenceKernel ref{reference_kernel(growth->at("reference"), landscape.traits(), landscape.environments())};
    record("importance_sampled",
           gamma_importance_sampled(kernel, ref, pi0, landscape, omega, n, samples, seed, g.threads));
  }
  if (out.size() == 2) throw ConfigError("[growth] unknown method '" + method + "'");
  emit(g, "growth", out, csv.str());
  return 0;
}

HereditaryGenealogyKernel gaussian_kernel_from(const Json& config) {
  const Json* k = find_key(config, "genealogy.kernel");
  if (!k) throw ConfigError("gaussian genealogy needs a [genealogy.kernel] table");
  HereditaryGenealogyKernel kernel;
  kernel.initial_mean = k->value("initial_mean", 0.0);
  kernel.initial_variance = k->value("initial_variance", 1.0);
  const std::vector<double> levels = k->value("levels", std::vector<double>{});
  auto param = [&](const char* key, double fallback) -> std::vector<double> {
    if (!k->contains(key)) return {fallback};
    const Json& v = k->at(key);
    if (v.is_array()) {
      auto out = v.get<std::vector<double>>();
      if (out.size() != levels.size()) throw ConfigError(std::string("[genealogy.kernel] '") + key + "' must match 'levels'");
      return out;
    }
    return {v.get<double>()};
  };
  const auto intercept = param("intercept", 0.0);
  const auto slope = param("slope", 0.0);
  const auto variance = param("variance", 1.0);
  kernel.transition = [=](double e) {
    auto pick = [&](const std::vector<double>& values) {
      if (values.size() == 1) return values[0];
      for (std::size_t i = 0; i < levels.size(); ++i) {
        if (std::abs(levels[i] - e) <= 1e-12) return values[i];
      }
      throw std::domain_error("environment value " + format_double(e) + " is not one of the kernel levels");
    };
    return GaussianTransition{pick(intercept), pick(slope), pick(variance)};
  };
  return kernel;
}

int cmd_genealogy(const Globals& g) {
  const Json config = load(g);
  const Json* gen = find_key(config, "genealogy");
  const Index n = gen ? gen->value("horizon", Index{5}) : Index{5};
  const std::uint64_t seed = seed_of(g, config, "genealogy");
  const auto landscape_spec = landscape_from_config(config);

  if (landscape_spec.gaussian) {
    const auto env_spec = environment_from_config(config);
    RealPath omega;
    if (const Json* values = find_key(config, "path.values")) {
      omega.values = values->get<std::vector<double>>();
    } else if (env_spec.gaussian) {
      omega = sample_path(*env_spec.gaussian, n, seed);
    } else {
      throw ConfigError("gaussian genealogy needs [path] values or a gaussian environment");
    }
    const auto law = gaussian_genealogy(gaussian_kernel_from(config), *landscape_spec.gaussian, omega, n);
    write_file(g, "mean.csv", csv_from([&](std::ostream& o) { write_matrix_csv(o, Matrix(law.mean.transpose())); }));
    write_file(g, "covariance.csv", csv_from([&](std::ostream& o) { write_matrix_csv(o, law.covariance); }));
    Json out = to_json(law);
    out["path"] = omega.values;
    emit(g, "genealogy", out, csv_from([&](std::ostream& o) {
           o << "coordinate,mean,variance\n";
           for (Index i = 0; i < law.mean.size(); ++i) {
             o << i << ',' << format_double(law.mean[i]) << ',' << format_double(law.covariance(i, i)) << '\n';
           }
         }));
    return 0;
  }

  const FitnessLandscape landscape = *landscape_spec.finite;
  const FiniteEnv env = finite_environment_from_config(config);
  const Strategy strategy = strategy_from_config(config, landscape.traits());
  const FinitePath omega = finite_path_from_config(config, env, n, seed);

  std::vector<Vector> exact;
  Json out{{"horizon", n}, {"path", omega.values}};
  if (strategy.is_hereditary()) {
    const auto& kernel = std::get<Hereditary>(strategy.rule()).kernel;
    const auto law = hereditary_genealogy_exact(kernel, strategy.initial(), landscape, omega, n);
    exact = law.marginals;
    out["law"] = {{"kind", "hereditary"}, {"log_mean_weight", law.log_mean_weight}};
    const std::int64_t samples = gen ? gen->value("samples", std::int64_t{0}) : 0;
    if (samples > 0) {
      const auto mc = hereditary_genealogy_mc(kernel, strategy.initial(), landscape, omega, n, samples, seed, g.threads);
      out["monte_carlo"] = to_json(mc);
    }
  } else {
    exact = product_genealogy(strategy, landscape, omega, n).marginals;
    out["law"] = {{"kind", "product"}};
  }
  Json marginals = Json::array();
  for (const auto& m : exact) marginals.push_back(to_json(m));
  out["law"]["marginals"] = marginals;
  write_file(g, "marginals.csv", csv_from([&](std::ostream& o) { write_marginals_csv(o, exact); }));

  if (gen && gen->value("compare", false)) {
    const auto roots_list = gen->value("roots", std::vector<std::int64_t>{100, 1000, 10000});
    const std::int64_t replicates = gen->value("replicates", std::int64_t{10});
    SimulationOptions options = simulation_options_from_config(config);
    options.generations = n;
    options.record_genealogy = true;
    const OffspringFamily family = family_from_config(config);
    Json table = Json::array();
    std::ostringstream tv_csv;
    tv_csv << "roots,mean_tv,std_error,surviving\n";
    for (std::size_t i = 0; i < roots_list.size(); ++i) {
      options.roots = roots_list[i];
      const auto runs =
          run_replicates_on_path(strategy, family, landscape, omega, options, replicates, seed + i, g.threads);
      MeanAccumulator tv;
      for (const auto& r : runs) {
        if (auto d = lineage_distance(r, exact)) tv.add(*d);
      }
      const double se = tv.count() > 1 ? tv.standard_error() : 0.0;
      table.push_back({{"roots", roots_list[i]}, {"mean_tv", tv.mean()}, {"std_error", se}, {"surviving", tv.count()}});
      tv_csv << roots_list[i] << ',' << format_double(tv.mean()) << ',' << format_double(se) << ',' << tv.count()
             << '\n';
    }
    out["comparison"] = table;
    write_file(g, "tv.csv", tv_csv.str());
  }
  emit(g, "genealogy", out, csv_from([&](std::ostream& o) { write_marginals_csv(o, exact); }));
  return 0;
}

struct GaussianArgs {
  std::optional<double> scale, width_sq, mean, variance, rho, chi;
};

GaussianProblem gaussian_problem_from_args(const Globals& g, const GaussianArgs& a) {
  GaussianLandscape landscape{1.0, 1.0};
  double mean = 0.0, variance = 1.0, rho = 0.0;
  if (!g.config_path.empty()) {
    const auto prob = gaussian_problem_from(load(g));
    landscape = prob.landscape;
    mean = prob.env.mean();
    variance = prob.env.variance();
    rho = prob.env.rho();
  }
  if (a.scale) landscape.scale = *a.scale;
  if (a.width_sq) landscape.width_sq = *a.width_sq;
  if (a.mean) mean = *a.mean;
  if (a.variance) variance = *a.variance;
  if (a.chi) variance = *a.chi * landscape.width_sq;
  if (a.rho) rho = *a.rho;
  validate(landscape);
  return {landscape, GaussianAR1Env(mean, variance, rho)};
}

int cmd_gaussian(const Globals& g, const GaussianArgs& a, bool gains_only) {
  const auto prob = gaussian_problem_from_args(g, a);
  if (gains_only) {
    const double mixed = gaussian_gain_mixed_over_pure(prob);
    const double sensed = gaussian_gain_sensing_over_no_sensing(prob);
    emit(g, "gain",
         {{"chi", prob.chi()}, {"rho", prob.env.rho()}, {"gain_mixed_over_pure", mixed},
          {"gain_sensing_over_no_sensing", sensed}},
         "chi,rho,gain_mixed_over_pure,gain_sensing_over_no_sensing\n" + format_double(prob.chi()) + "," +
             format_double(prob.env.rho()) + "," + format_double(mixed) + "," + format_double(sensed) + "\n");
    return 0;
  }
  const auto plain = gaussian_optimal_no_sensing(prob);
  const auto sensed = gaussian_optimal_sensing(prob);
  emit(g, "optimal", gaussian_summary(prob),
       "strategy,mean_or_intercept,slope,variance,rate\n"
       "no_sensing," + format_double(plain.strategy.mean) + ",0," + format_double(plain.strategy.variance) + "," +
           format_double(plain.rate) + "\nsensing," + format_double(sensed.strategy.intercept) + "," +
           format_double(sensed.strategy.slope) + "," + format_double(sensed.strategy.variance) + "," +
           format_double(sensed.rate) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal strategies and simulation for multitype branching processes in random environments"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_path, "Config file (.toml or .json)");
  app.add_option("--seed", g.seed, "Random seed (overrides the config)");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out_dir, "Directory for output files");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));

  auto* optimize = app.add_subcommand("optimize", "Optimal no-sensing or sensing strategy");
  ScanArgs scan_args;
  auto* scan = app.add_subcommand("scan", "Sweep one parameter and tabulate optimal rates");
  scan->add_option("--param", scan_args.parameter, "q, q1, q2, nu1, chi or rho");
  scan->add_option("--values", scan_args.values, "Comma list or lo:hi:step");
  auto* simulate = app.add_subcommand("simulate", "Forward simulation of the branching process");
  auto* growth = app.add_subcommand("growth", "Growth rate of a strategy");
  auto* genealogy = app.add_subcommand("genealogy", "Typical genealogy law");
  auto* gaussian = app.add_subcommand("gaussian", "Closed forms for Gaussian landscapes");
  gaussian->require_subcommand(1);
  GaussianArgs gargs;
  for (auto* sub : {gaussian->add_subcommand("optimal", "Optimal strategies and rates"),
                    gaussian->add_subcommand("gain", "Relative gains")}) {
    sub->fallthrough();
    sub->add_option("--scale", gargs.scale, "Fitness scale C");
    sub->add_option("--width-sq", gargs.width_sq, "Fitness width sigma1^2");
    sub->add_option("--mean", gargs.mean, "Environment mean");
    sub->add_option("--variance", gargs.variance, "Environment variance sigma2^2");
    sub->add_option("--chi", gargs.chi, "sigma2^2 / sigma1^2 (overrides --variance)");
    sub->add_option("--rho", gargs.rho, "Environment lag-1 correlation");
  }
  for (auto* sub : {optimize, scan, simulate, growth, genealogy, gaussian}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (optimize->parsed()) return cmd_optimize(g);
    if (scan->parsed()) return cmd_scan(g, scan_args);
    if (simulate->parsed()) return cmd_simulate(g);
    if (growth->parsed()) return cmd_growth(g);
    if (genealogy->parsed()) return cmd_genealogy(g);
    if (gaussian->parsed()) return cmd_gaussian(g, gargs, gaussian->get_subcommand("gain")->parsed());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
