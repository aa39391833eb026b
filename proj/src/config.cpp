#include "mbpre/config.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace mbpre {

namespace {

class TomlParser {
 public:
  explicit TomlParser(const std::string& text) : text_(text) {}

  Json parse() {
    Json root = Json::object();
    Json* table = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        table = &open_table(root);
      } else {
        auto keys = parse_key();
        skip_spaces();
        expect('=');
        skip_spaces();
        Json value = parse_value();
        assign(*table, keys, std::move(value));
      }
      end_of_line();
    }
    return root;
  }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;

  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return eof() ? '\0' : text_[pos_]; }

  [[noreturn]] void fail(const std::string& what) const {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < pos_ && i < text_.size(); ++i) {
      if (text_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError("config line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what);
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_spaces() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
  }

  void skip_comment() {
    if (peek() == '#') {
      while (!eof() && peek() != '\n') ++pos_;
    }
  }

  void skip_blank_lines() {
    while (!eof()) {
      skip_spaces();
      skip_comment();
      if (peek() == '\n') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  // Whitespace, comments and newlines inside arrays and inline tables.
  void skip_layout() {
    while (!eof()) {
      skip_spaces();
      skip_comment();
      if (peek() == '\n') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  void end_of_line() {
    skip_spaces();
    skip_comment();
    if (eof()) return;
    if (peek() != '\n') fail("unexpected characters after value");
    ++pos_;
  }

  static bool bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }

  std::vector<std::string> parse_key() {
    std::vector<std::string> keys;
    while (true) {
      skip_spaces();
      if (peek() == '"') {
        keys.push_back(parse_basic_string());
      } else {
        const auto start = pos_;
        while (!eof() && bare_key_char(peek())) ++pos_;
        if (pos_ == start) fail("expected a key");
        keys.push_back(text_.substr(start, pos_ - start));
      }
      skip_spaces();
      if (peek() != '.') break;
      ++pos_;
    }
    return keys;
  }

  Json& open_table(Json& root) {
    expect('[');
    if (peek() == '[') fail("arrays of tables are not supported");
    auto keys = parse_key();
    expect(']');
    Json* t = &root;
    for (const auto& k : keys) {
      if (!t->contains(k)) (*t)[k] = Json::object();
      t = &(*t)[k];
      if (!t->is_object()) fail("'" + k + "' is not a table");
    }
    return *t;
  }

  void assign(Json& table, const std::vector<std::string>& keys, Json value) {
    Json* t = &table;
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
      if (!t->contains(keys[i])) (*t)[keys[i]] = Json::object();
      t = &(*t)[keys[i]];
      if (!t->is_object()) fail("'" + keys[i] + "' is not a table");
    }
    if (t->contains(keys.back())) fail("duplicate key '" + keys.back() + "'");
    (*t)[keys.back()] = std::move(value);
  }

  std::string parse_basic_string() {
    expect('"');
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = text_[pos_++];
      if (c == '"') break;
      if (c != '\\') {
        out += c;
        continue;
      }
      const char esc = text_[pos_++];
      switch (esc) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(std::string("unsupported escape \\") + esc);
      }
    }
    return out;
  }

  std::string parse_literal_string() {
    expect('\'');
    const auto start = pos_;
    while (!eof() && peek() != '\'' && peek() != '\n') ++pos_;
    if (peek() != '\'') fail("unterminated string");
    return text_.substr(start, pos_++ - start);
  }

  Json parse_value() {
    const char c = peek();
    if (c == '"') return parse_basic_string();
    if (c == '\'') return parse_literal_string();
    if (c == '[') return parse_array();
    if (c == '{') return parse_inline_table();
    return parse_scalar();
  }

  Json parse_array() {
    expect('[');
    Json out = Json::array();
    while (true) {
      skip_layout();
      if (peek() == ']') {
        ++pos_;
        return out;
      }
      out.push_back(parse_value());
      skip_layout();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  Json parse_inline_table() {
    expect('{');
    Json out = Json::object();
    skip_spaces();
    if (peek() == '}') {
      ++pos_;
      return out;
    }
    while (true) {
      auto keys = parse_key();
      skip_spaces();
      expect('=');
      skip_spaces();
      assign(out, keys, parse_value());
      skip_spaces();
      if (peek() == ',') {
        ++pos_;
        continue;
      }
      expect('}');
      return out;
    }
  }

  Json parse_scalar() {
    const auto start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                      peek() == '.' || peek() == '_')) {
      ++pos_;
    }
    std::string word = text_.substr(start, pos_ - start);
    if (word.empty()) fail("expected a value");
    if (word == "true") return true;
    if (word == "false") return false;
    if (word == "inf" || word == "+inf") return std::numeric_limits<double>::infinity();
    if (word == "-inf") return -std::numeric_limits<double>::infinity();
    std::erase(word, '_');
    const bool is_float = word.find_first_of(".eE") != std::string::npos;
    try {
      std::size_t used = 0;
      if (is_float) {
        const double v = std::stod(word, &used);
        if (used == word.size()) return v;
      } else {
        const long long v = std::stoll(word, &used);
        if (used == word.size()) return v;
      }
    } catch (const std::exception&) {
    }
    pos_ = start;
    fail("invalid value '" + word + "'");
  }
};

const Json& section(const Json& config, const char* name) {
  static const Json empty = Json::object();
  if (!config.contains(name)) return empty;
  const Json& s = config.at(name);
  if (!s.is_object()) throw ConfigError(std::string("[") + name + "] must be a table");
  return s;
}

template <class T>
T get_or(const Json& table, const char* key, T fallback) {
  if (!table.contains(key)) return fallback;
  try {
    return table.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

double number_or(const Json& table, const char* key, double fallback) {
  if (!table.contains(key)) return fallback;
  try {
    return number_from_json(table.at(key));
  } catch (const std::exception&) {
    throw ConfigError(std::string("config key '") + key + "' must be a number");
  }
}

double required_number(const Json& table, const char* section_name, const char* key) {
  if (!table.contains(key)) throw ConfigError(std::string("[") + section_name + "] needs '" + key + "'");
  return number_or(table, key, 0.0);
}

std::vector<std::string> labels_or_empty(const Json& table, const char* key) {
  if (!table.contains(key)) return {};
  return get_or<std::vector<std::string>>(table, key, {});
}

template <class F>
auto wrap(const char* where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string(where) + ": " + e.what());
  }
}

}  // namespace

Json parse_toml(const std::string& text) { return TomlParser(text).parse(); }

Json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  Json config;
  const auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".json") {
    try {
      config = Json::parse(buf.str());
    } catch (const Json::exception& e) {
      throw ConfigError("config '" + path + "': " + e.what());
    }
  } else {
    config = parse_toml(buf.str());
  }
  if (!config.is_object()) throw ConfigError("config '" + path + "' must be a table");
  config["_base_dir"] = std::filesystem::path(path).parent_path().string();
  return config;
}

const Json* find_key(const Json& config, const std::string& dotted) {
  const Json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const auto key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) return nullptr;
    node = &node->at(key);
    if (dot == std::string::npos) return node;
    start = dot + 1;
  }
}

LandscapeSpec landscape_from_config(const Json& config) {
  if (!config.contains("landscape")) throw ConfigError("config needs a [landscape] table");
  const Json& t = section(config, "landscape");
  return wrap("[landscape]", [&] {
    LandscapeSpec spec;
    const auto kind = get_or<std::string>(t, "kind", t.contains("file") ? "csv" : "matrix");
    if (kind == "matrix") {
      if (!t.contains("mean")) throw ConfigError("[landscape] needs 'mean' (rows = traits, columns = states)");
      spec.finite.emplace(matrix_from_json(t.at("mean")), labels_or_empty(t, "traits"),
                          labels_or_empty(t, "environments"));
    } else if (kind == "csv") {
      std::filesystem::path file = get_or<std::string>(t, "file", "");
      if (file.empty()) throw ConfigError("[landscape] kind = \"csv\" needs 'file'");
      if (file.is_relative() && config.contains("_base_dir")) {
        file = std::filesystem::path(config.at("_base_dir").get<std::string>()) / file;
      }
      if (!std::filesystem::exists(file)) throw ConfigError("fitness csv '" + file.string() + "' does not exist");
      spec.finite.emplace(FitnessLandscape::from_csv_file(file.string()));
    } else if (kind == "gaussian") {
      GaussianLandscape g{required_number(t, "landscape", "scale"), required_number(t, "landscape", "width_sq")};
      validate(g);
      spec.gaussian = g;
    } else {
      throw ConfigError("[landscape] unknown kind '" + kind + "'");
    }
    return spec;
  });
}

FitnessLandscape finite_landscape_from_config(const Json& config) {
  auto spec = landscape_from_config(config);
  if (!spec.finite) throw ConfigError("this command needs a finite landscape");
  return *spec.finite;
}

EnvironmentSpec environment_from_config(const Json& config) {
  if (!config.contains("environment")) throw ConfigError("config needs an [environment] table");
  const Json& t = section(config, "environment");
  return wrap("[environment]", [&] {
    EnvironmentSpec spec;
    const auto kind = get_or<std::string>(t, "kind", "iid");
    const auto states = labels_or_empty(t, "states");
    if (kind == "iid") {
      if (!t.contains("marginal")) throw ConfigError("[environment] kind = \"iid\" needs 'marginal'");
      spec.finite = FiniteEnv::iid(vector_from_json(t.at("marginal")), states);
    } else if (kind == "markov") {
      if (!t.contains("transition")) throw ConfigError("[environment] kind = \"markov\" needs 'transition'");
      spec.finite = FiniteEnv::markov(matrix_from_json(t.at("transition")), states);
    } else if (kind == "two_state") {
      const double q = number_or(t, "q", std::numeric_limits<double>::quiet_NaN());
      const double q1 = number_or(t, "q1", q);
      const double q2 = number_or(t, "q2", q);
      if (std::isnan(q1) || std::isnan(q2)) throw ConfigError("[environment] two_state needs 'q' or 'q1' and 'q2'");
      spec.finite = FiniteEnv::two_state_markov(q1, q2);
    } else if (kind == "gaussian") {
      spec.gaussian.emplace(number_or(t, "mean", 0.0), required_number(t, "environment", "variance"),
                            number_or(t, "rho", 0.0));
    } else {
      throw ConfigError("[environment] unknown kind '" + kind + "'");
    }
    return spec;
  });
}

FiniteEnv finite_environment_from_config(const Json& config) {
  auto spec = environment_from_config(config);
  if (!spec.finite) throw ConfigError("this command needs a finite environment");
  return *spec.finite;
}

Strategy strategy_from_config(const Json& config, Index traits) {
  if (!config.contains("strategy")) {
    return Strategy::no_sensing(Vector::Constant(traits, 1.0 / static_cast<double>(traits)));
  }
  return wrap("[strategy]", [&] { return strategy_from_json(section(config, "strategy")); });
}

SolverOptions solver_options_from_config(const Json& config) {
  const Json& t = section(config, "solver");
  SolverOptions o;
  o.tol = number_or(t, "tol", o.tol);
  o.max_iter = get_or<std::int64_t>(t, "max_iter", o.max_iter);
  o.support_tol = number_or(t, "support_tol", o.support_tol);
  if (!(o.tol > 0.0) || o.max_iter < 1 || !(o.support_tol >= 0.0)) throw ConfigError("[solver] invalid options");
  return o;
}

OffspringFamily family_from_config(const Json& config) {
  const Json& t = section(config, "simulation");
  return wrap("[simulation]", [&] { return parse_offspring_family(get_or<std::string>(t, "family", "poisson")); });
}

SimulationOptions simulation_options_from_config(const Json& config) {
  const Json& t = section(config, "simulation");
  SimulationOptions o;
  o.generations = get_or<std::int64_t>(t, "generations", 10);
  o.roots = get_or<std::int64_t>(t, "roots", 1);
  o.cap = static_cast<std::int64_t>(number_or(t, "cap", static_cast<double>(o.cap)));
  o.record_genealogy = get_or<bool>(t, "record_genealogy", false);
  if (o.generations < 0 || o.roots < 1 || o.cap < 1) throw ConfigError("[simulation] invalid options");
  return o;
}

std::int64_t replicates_from_config(const Json& config) {
  const auto r = get_or<std::int64_t>(section(config, "simulation"), "replicates", 1);
  if (r < 0) throw ConfigError("[simulation] replicates must be >= 0");
  return r;
}

FinitePath finite_path_from_config(const Json& config, const FiniteEnv& env, Index length, std::uint64_t seed) {
  const Json& t = section(config, "path");
  if (!t.contains("values")) return sample_path(env, length, seed);
  return wrap("[path]", [&] {
    FinitePath path;
    path.seed = seed;
    for (const auto& v : t.at("values")) {
      Index e = -1;
      if (v.is_string()) {
        e = env.index_of(v.get<std::string>());
      } else if (v.is_number_integer()) {
        e = v.get<Index>();
      }
      if (e < 0 || e >= env.size()) throw ConfigError("[path] value " + v.dump() + " is not an environment state");
      path.values.push_back(e);
    }
    if (path.size() < length) throw ConfigError("[path] has fewer states than the horizon");
    return path;
  });
}

}  // namespace mbpre
