#include "mbpre/io.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace mbpre {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json number_to_json(double x) {
  if (std::isfinite(x)) return x;
  return format_double(x);
}

double number_from_json(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw std::invalid_argument("expected a number, got " + j.dump());
}

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(number_to_json(v[i]));
  return out;
}

Json to_json(const Matrix& m) {
  Json out = Json::array();
  for (Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Vector(m.row(i).transpose())));
  return out;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected an array of numbers, got " + j.dump());
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = number_from_json(j[i]);
  return v;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("expected a non-empty array of rows");
  const auto cols = j[0].size();
  Matrix m(static_cast<Index>(j.size()), static_cast<Index>(cols));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw std::invalid_argument("matrix rows must have equal length");
    m.row(static_cast<Index>(i)) = vector_from_json(j[i]).transpose();
  }
  return m;
}

Json to_json(const Strategy& strategy) {
  Json out;
  if (const auto* r = std::get_if<NoSensing>(&strategy.rule())) {
    out["kind"] = "no_sensing";
    out["p"] = to_json(r->p);
  } else if (const auto* r = std::get_if<Sensing>(&strategy.rule())) {
    out["kind"] = "sensing";
    out["by_state"] = to_json(Matrix(r->by_state.transpose()));
  } else {
    const auto& h = std::get<Hereditary>(strategy.rule());
    out["kind"] = "hereditary";
    Json k = Json::array();
    for (const auto& m : h.kernel) k.push_back(to_json(m));
    out["kernel"] = k;
  }
  out["initial"] = to_json(strategy.initial());
  return out;
}

Strategy strategy_from_json(const Json& j) {
  const auto kind = j.value("kind", std::string("no_sensing"));
  if (kind == "no_sensing") {
    Vector p = vector_from_json(j.at("p"));
    if (j.contains("initial")) return Strategy::no_sensing(std::move(p), vector_from_json(j.at("initial")));
    return Strategy::no_sensing(std::move(p));
  }
  if (kind == "sensing") {
    Matrix by_state = matrix_from_json(j.at("by_state")).transpose();
    Vector initial = j.contains("initial") ? vector_from_json(j.at("initial"))
                                           : Vector(by_state.rowwise().mean());
    return Strategy::sensing(std::move(by_state), std::move(initial));
  }
  if (kind == "hereditary") {
    std::vector<Matrix> kernel;
    for (const auto& m : j.at("kernel")) kernel.push_back(matrix_from_json(m));
    return Strategy::hereditary(std::move(kernel), vector_from_json(j.at("initial")));
  }
  throw std::invalid_argument("unknown strategy kind '" + kind + "'");
}

Json to_json(const OptimizationResult& r) {
  Json out;
  out["strategy"] = to_json(r.strategy);
  out["rate"] = number_to_json(r.rate);
  out["certificate_gap"] = number_to_json(r.certificate_gap);
  out["support"] = r.support;
  out["iterations"] = r.iterations;
  out["converged"] = r.converged;
  out["non_unique"] = r.non_unique;
  out["method"] = std::string(to_string(r.method));
  return out;
}

Json to_json(const SurvivalQuery& q) {
  return {{"strategy", to_json(q.strategy)},
          {"rate", number_to_json(q.rate)},
          {"in_survival_set", q.in_survival_set},
          {"polymorphism_required", q.polymorphism_required}};
}

Json to_json(const GrowthReport& r) {
  Json out{{"rate", number_to_json(r.rate)},
           {"method", std::string(to_string(r.method))},
           {"std_error", number_to_json(r.std_error)},
           {"all_weights_zero", r.all_weights_zero}};
  if (r.horizon) out["horizon"] = *r.horizon;
  return out;
}

Json to_json(const GaussianOptimum& o) {
  return {{"strategy", {{"mean", o.strategy.mean}, {"variance", o.strategy.variance}, {"dirac", o.strategy.is_dirac()}}},
          {"rate", number_to_json(o.rate)}};
}

Json to_json(const GaussianSensingOptimum& o) {
  return {{"strategy",
           {{"slope", o.strategy.slope},
            {"intercept", o.strategy.intercept},
            {"variance", o.strategy.variance},
            {"dirac", o.strategy.variance == 0.0}}},
          {"rate", number_to_json(o.rate)}};
}

Json to_json(const ProductGenealogyLaw& law) {
  Json m = Json::array();
  for (const auto& v : law.marginals) m.push_back(to_json(v));
  return {{"marginals", m}};
}

Json to_json(const GaussianGenealogyLaw& law) {
  return {{"mean", to_json(law.mean)},
          {"covariance", to_json(law.covariance)},
          {"rate", number_to_json(law.rate)},
          {"prior_mean", to_json(law.prior_mean)},
          {"prior_covariance", to_json(law.prior_covariance)}};
}

Json to_json(const WeightedPathSample& s) {
  Json m = Json::array(), se = Json::array();
  for (const auto& v : s.marginals) m.push_back(to_json(v));
  for (const auto& v : s.std_errors) se.push_back(to_json(v));
  return {{"marginals", m},
          {"std_errors", se},
          {"effective_sample_size", s.effective_sample_size},
          {"mean_weight", number_to_json(s.mean_weight)},
          {"samples", s.samples}};
}

Json to_json(const CompositionReport& r) {
  return {{"statistic", r.statistic},        {"dof", r.dof},
          {"p_value", r.p_value},            {"passed", r.passed},
          {"inconclusive", r.inconclusive},  {"replicates_used", r.replicates_used},
          {"uniforms", r.uniforms}};
}

Json summary_json(const SimulationRun& run) {
  const auto& last = run.final_state();
  Json out{{"seed", run.seed},
           {"generations", last.generation},
           {"final_total", last.total},
           {"log_size", number_to_json(last.log_size())},
           {"capped", run.capped},
           {"final_counts", last.counts}};
  if (run.replicate) out["replicate"] = *run.replicate;
  out["extinct_at"] = run.extinct_at ? Json(*run.extinct_at) : Json(nullptr);
  return out;
}

void write_trajectory_csv(std::ostream& out, const std::vector<SimulationRun>& runs) {
  out << "replicate,generation,trait,count,log_scale\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    for (const auto& s : runs[r].trajectory) {
      for (std::size_t t = 0; t < s.counts.size(); ++t) {
        out << r << ',' << s.generation << ',' << t << ',' << s.counts[t] << ',' << format_double(s.log_scale) << '\n';
      }
    }
  }
}

void write_lineages_csv(std::ostream& out, const std::vector<LineageRecord>& lineages) {
  out << "lineage,generation,trait\n";
  for (std::size_t i = 0; i < lineages.size(); ++i) {
    for (std::size_t g = 0; g < lineages[i].traits.size(); ++g) out << i << ',' << g << ',' << lineages[i].traits[g] << '\n';
  }
}

void write_marginals_csv(std::ostream& out, const std::vector<Vector>& marginals) {
  out << "generation,trait,probability\n";
  for (std::size_t g = 0; g < marginals.size(); ++g) {
    for (Index t = 0; t < marginals[g].size(); ++t) out << g << ',' << t << ',' << format_double(marginals[g][t]) << '\n';
  }
}

void write_matrix_csv(std::ostream& out, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

void write_weighted_paths_csv(std::ostream& out, const WeightedPathSample& sample) {
  const Index cols = sample.paths.cols();
  for (Index i = 0; i < cols; ++i) out << 't' << i << ',';
  out << "weight\n";
  for (Index r = 0; r < sample.paths.rows(); ++r) {
    for (Index i = 0; i < cols; ++i) out << sample.paths(r, i) << ',';
    out << format_double(sample.weights[r]) << '\n';
  }
}

}  // namespace mbpre
