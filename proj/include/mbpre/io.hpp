#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mbpre/gaussian.hpp"
#include "mbpre/genealogy.hpp"
#include "mbpre/growth.hpp"
#include "mbpre/optimize.hpp"
#include "mbpre/simulate.hpp"

namespace mbpre {

using Json = nlohmann::json;

// Non-finite values become the strings "inf", "-inf" and "nan".
Json number_to_json(double x);
double number_from_json(const Json& j);

Json to_json(const Vector& v);
Json to_json(const Matrix& m);  // array of rows
Vector vector_from_json(const Json& j);
Matrix matrix_from_json(const Json& j);

Json to_json(const Strategy& strategy);
Strategy strategy_from_json(const Json& j);

Json to_json(const OptimizationResult& result);
Json to_json(const SurvivalQuery& query);
Json to_json(const GrowthReport& report);
Json to_json(const GaussianOptimum& optimum);
Json to_json(const GaussianSensingOptimum& optimum);
Json to_json(const ProductGenealogyLaw& law);
Json to_json(const GaussianGenealogyLaw& law);
Json to_json(const WeightedPathSample& sample);
Json to_json(const CompositionReport& report);
// Summary without the trajectory: extinction, final size, growth estimate.
Json summary_json(const SimulationRun& run);

// CSV writers; doubles use 17 significant digits.
void write_trajectory_csv(std::ostream& out, const std::vector<SimulationRun>& runs);
void write_lineages_csv(std::ostream& out, const std::vector<LineageRecord>& lineages);
void write_marginals_csv(std::ostream& out, const std::vector<Vector>& marginals);
void write_matrix_csv(std::ostream& out, const Matrix& m);
void write_weighted_paths_csv(std::ostream& out, const WeightedPathSample& sample);

std::string format_double(double x);

}  // namespace mbpre
