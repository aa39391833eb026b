#pragma once

#include <optional>
#include <string>

#include "mbpre/io.hpp"

namespace mbpre {

// Error in a configuration file or value; the CLI maps it to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parses the TOML subset used by the bundled configs: [table] and
// [table.sub] headers, key = value pairs, strings, numbers, booleans,
// (nested, multi-line) arrays, inline tables and # comments.
Json parse_toml(const std::string& text);

// Reads a .toml or .json file. Relative paths inside the config (for
// example a fitness CSV) are resolved against the config's directory and
// stored under "_base_dir".
Json load_config(const std::string& path);

// A finite landscape (matrix, CSV) or, for kind = "gaussian", the analytic form.
struct LandscapeSpec {
  std::optional<FitnessLandscape> finite;
  std::optional<GaussianLandscape> gaussian;
};

LandscapeSpec landscape_from_config(const Json& config);
FitnessLandscape finite_landscape_from_config(const Json& config);

struct EnvironmentSpec {
  std::optional<FiniteEnv> finite;
  std::optional<GaussianAR1Env> gaussian;
};

EnvironmentSpec environment_from_config(const Json& config);
FiniteEnv finite_environment_from_config(const Json& config);

// [strategy]; missing tables default to the uniform no-sensing strategy.
Strategy strategy_from_config(const Json& config, Index traits);
SolverOptions solver_options_from_config(const Json& config);
OffspringFamily family_from_config(const Json& config);
SimulationOptions simulation_options_from_config(const Json& config);
std::int64_t replicates_from_config(const Json& config);

// Environment path from [path] values = [...] (labels or indices) or
// sampled from the environment with [path] seed.
FinitePath finite_path_from_config(const Json& config, const FiniteEnv& env, Index length, std::uint64_t seed);

// Looks up a dotted key such as "simulation.seed".
const Json* find_key(const Json& config, const std::string& dotted);

}  // namespace mbpre
