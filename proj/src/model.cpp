#include "mbpre/model.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mbpre {

namespace {

constexpr double kNormalizationTol = 1e-12;

std::vector<std::string> labels_or_default(Index n, std::vector<std::string> labels, const char* prefix) {
  if (labels.empty()) {
    for (Index i = 0; i < n; ++i) labels.push_back(prefix + std::to_string(i + 1));
  }
  if (static_cast<Index>(labels.size()) != n) {
    throw std::invalid_argument("fitness landscape: label count does not match matrix shape");
  }
  return labels;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

void check_distribution(const Vector& p, std::string_view what) {
  if (p.size() == 0) throw std::invalid_argument(std::string(what) + ": empty distribution");
  for (Index i = 0; i < p.size(); ++i) {
    if (!(p[i] >= 0.0) || !std::isfinite(p[i])) {
      throw std::invalid_argument(std::string(what) + ": entries must be finite and nonnegative");
    }
  }
  if (std::abs(p.sum() - 1.0) > kNormalizationTol) {
    throw std::invalid_argument(std::string(what) + ": entries must sum to 1");
  }
}

FitnessLandscape::FitnessLandscape(Matrix mean, std::vector<std::string> traits,
                                   std::vector<std::string> environments)
    : mean_(std::move(mean)) {
  if (mean_.rows() == 0 || mean_.cols() == 0) {
    throw std::invalid_argument("fitness landscape: need at least one trait and one environment");
  }
  if (!mean_.allFinite() || mean_.minCoeff() < 0.0) {
    throw std::invalid_argument("fitness landscape: means must be finite and nonnegative");
  }
  trait_labels_ = labels_or_default(mean_.rows(), std::move(traits), "t");
  env_labels_ = labels_or_default(mean_.cols(), std::move(environments), "e");
}

FitnessLandscape FitnessLandscape::from_csv(std::istream& in) {
  std::string line;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    if (!trim(line).empty()) header = split_csv_line(line);
  }
  if (header.size() < 2) throw std::invalid_argument("fitness csv: header needs a label column and environments");
  std::vector<std::string> envs(header.begin() + 1, header.end());
  std::vector<std::string> traits;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw std::invalid_argument("fitness csv: row '" + line + "' has the wrong number of cells");
    }
    traits.push_back(cells[0]);
    std::vector<double> values;
    for (std::size_t j = 1; j < cells.size(); ++j) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cells[j], &used));
        if (used != cells[j].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw std::invalid_argument("fitness csv: '" + cells[j] + "' is not a number");
      }
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw std::invalid_argument("fitness csv: no trait rows");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(envs.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < envs.size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return FitnessLandscape(std::move(m), std::move(traits), std::move(envs));
}

FitnessLandscape FitnessLandscape::from_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fitness csv '" + path + "'");
  return from_csv(in);
}

void validate(const GaussianLandscape& landscape) {
  if (!(landscape.scale > 0.0) || !std::isfinite(landscape.scale)) {
    throw std::invalid_argument("gaussian landscape: C must be positive");
  }
  if (!(landscape.width_sq > 0.0) || !std::isfinite(landscape.width_sq)) {
    throw std::invalid_argument("gaussian landscape: sigma1^2 must be positive");
  }
}

Vector TraitGrid::points() const {
  if (!(step > 0.0) || !(hi >= lo)) throw std::invalid_argument("trait grid: need step > 0 and hi >= lo");
  const auto n = static_cast<Index>(std::floor((hi - lo) / step + 1e-9)) + 1;
  Vector pts(n);
  for (Index i = 0; i < n; ++i) pts[i] = lo + static_cast<double>(i) * step;
  return pts;
}

FitnessLandscape tabulate(const GaussianLandscape& landscape, const Vector& traits, const Vector& env_points) {
  validate(landscape);
  Matrix m(traits.size(), env_points.size());
  for (Index i = 0; i < traits.size(); ++i) {
    for (Index j = 0; j < env_points.size(); ++j) m(i, j) = landscape(traits[i], env_points[j]);
  }
  return FitnessLandscape(std::move(m));
}

OffspringFamily parse_offspring_family(std::string_view name) {
  if (name == "poisson") return OffspringFamily::Poisson;
  if (name == "geometric") return OffspringFamily::Geometric;
  if (name == "bernoulli" || name == "deterministic_bernoulli") return OffspringFamily::Bernoulli;
  throw std::invalid_argument("unknown offspring family '" + std::string(name) + "'");
}

std::string_view to_string(OffspringFamily family) {
  switch (family) {
    case OffspringFamily::Poisson: return "poisson";
    case OffspringFamily::Geometric: return "geometric";
    case OffspringFamily::Bernoulli: return "bernoulli";
  }
  return "unknown";
}

std::int64_t sample_offspring(OffspringFamily family, double mean, Rng& rng) {
  return sample_offspring_total(family, mean, 1, rng);
}

std::int64_t sample_offspring_total(OffspringFamily family, double mean, std::int64_t parents, Rng& rng) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw std::invalid_argument("offspring mean must be finite and >= 0");
  if (parents <= 0 || mean == 0.0) return 0;
  switch (family) {
    case OffspringFamily::Poisson: {
      std::poisson_distribution<std::int64_t> d(mean * static_cast<double>(parents));
      return d(rng);
    }
    case OffspringFamily::Geometric: {
      // Failures before the first success, success probability 1 / (1 + m).
      const double p = 1.0 / (1.0 + mean);
      if (parents == 1) return std::geometric_distribution<std::int64_t>(p)(rng);
      return std::negative_binomial_distribution<std::int64_t>(parents, p)(rng);
    }
    case OffspringFamily::Bernoulli: {
      const double whole = std::floor(mean);
      const double frac = mean - whole;
      std::int64_t total = static_cast<std::int64_t>(whole) * parents;
      if (frac > 0.0) total += std::binomial_distribution<std::int64_t>(parents, frac)(rng);
      return total;
    }
  }
  return 0;
}

double offspring_variance(OffspringFamily family, double mean) {
  switch (family) {
    case OffspringFamily::Poisson: return mean;
    case OffspringFamily::Geometric: return mean * (1.0 + mean);
    case OffspringFamily::Bernoulli: {
      const double frac = mean - std::floor(mean);
      return frac * (1.0 - frac);
    }
  }
  return 0.0;
}

double zero_offspring_probability(OffspringFamily family, double mean) {
  switch (family) {
    case OffspringFamily::Poisson: return std::exp(-mean);
    case OffspringFamily::Geometric: return 1.0 / (1.0 + mean);
    case OffspringFamily::Bernoulli: return mean < 1.0 ? 1.0 - mean : 0.0;
  }
  return 1.0;
}

Strategy::Strategy(Rule rule, Vector initial) : rule_(std::move(rule)), initial_(std::move(initial)) {
  check_distribution(initial_, "initial trait law");
  const Index q = initial_.size();
  std::visit(
      [q](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, NoSensing>) {
          if (r.p.size() != q) throw std::invalid_argument("strategy: p has the wrong number of traits");
          check_distribution(r.p, "strategy p");
        } else if constexpr (std::is_same_v<T, Sensing>) {
          if (r.by_state.rows() != q) throw std::invalid_argument("sensing strategy: wrong number of traits");
          for (Index e = 0; e < r.by_state.cols(); ++e) check_distribution(r.by_state.col(e), "sensing strategy p_e");
        } else {
          for (const auto& k : r.kernel) {
            if (k.rows() != q || k.cols() != q) throw std::invalid_argument("hereditary kernel: wrong shape");
            for (Index t = 0; t < q; ++t) check_distribution(k.row(t).transpose(), "hereditary kernel row");
          }
        }
      },
      rule_);
}

Strategy Strategy::no_sensing(Vector p) {
  Vector initial = p;
  return Strategy(NoSensing{std::move(p)}, std::move(initial));
}

Strategy Strategy::no_sensing(Vector p, Vector initial) {
  return Strategy(NoSensing{std::move(p)}, std::move(initial));
}

Strategy Strategy::sensing(Matrix by_state, Vector initial) {
  return Strategy(Sensing{std::move(by_state)}, std::move(initial));
}

Strategy Strategy::hereditary(std::vector<Matrix> kernel, Vector initial) {
  return Strategy(Hereditary{std::move(kernel)}, std::move(initial));
}

Vector Strategy::child_law(Index parent_trait, Index env) const {
  return std::visit(
      [&](const auto& r) -> Vector {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, NoSensing>) {
          return r.p;
        } else if constexpr (std::is_same_v<T, Sensing>) {
          if (env < 0 || env >= r.by_state.cols()) throw std::domain_error("sensing strategy: no p_e for this state");
          return r.by_state.col(env);
        } else {
          if (env < 0 || env >= static_cast<Index>(r.kernel.size())) {
            throw std::domain_error("hereditary strategy: no kernel for this state");
          }
          return r.kernel[static_cast<std::size_t>(env)].row(parent_trait).transpose();
        }
      },
      rule_);
}

void Strategy::validate(Index traits, Index environments) const {
  if (initial_.size() != traits) throw std::invalid_argument("strategy: trait count does not match the landscape");
  if (const auto* s = std::get_if<Sensing>(&rule_); s && s->by_state.cols() != environments) {
    throw std::invalid_argument("sensing strategy: need one p_e per environment state");
  }
  if (const auto* h = std::get_if<Hereditary>(&rule_); h && static_cast<Index>(h->kernel.size()) != environments) {
    throw std::invalid_argument("hereditary strategy: need one kernel per environment state");
  }
}

}  // namespace mbpre
