#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "mbpre/env.hpp"
#include "mbpre/model.hpp"

namespace mbpre {

struct SolverOptions {
  double tol = 1e-8;             // target certificate gap
  std::int64_t max_iter = 100000;
  double support_tol = 1e-6;     // mass above which a trait counts as supported
};

enum class SolveMethod { MirrorAscent, ActiveSetNewton, InteriorPoint, ClosedForm, PerState };

std::string_view to_string(SolveMethod method);

struct OptimizationResult {
  Strategy strategy;
  double rate = 0.0;
  double certificate_gap = 0.0;
  std::vector<Index> support{};
  std::int64_t iterations = 0;
  bool converged = false;
  // Some other optimizer exists: the active traits are affinely dependent.
  bool non_unique = false;
  SolveMethod method = SolveMethod::MirrorAscent;
  // Sensing results only: one no-sensing solve per environment state.
  std::vector<OptimizationResult> per_state{};

  // p for NoSensing results; throws std::logic_error otherwise.
  const Vector& distribution() const;
  // Columns p_e for Sensing results; throws std::logic_error otherwise.
  const Matrix& by_state() const;
};

// max_t sum_e w_e m_{t,e} / m_{p,e} - 1. Zero exactly at optimal p (up to
// rounding); +infinity when m_{p,e} = 0 for some e with w_e > 0.
double certificate_gap(const Vector& p, const FitnessLandscape& landscape, const Vector& weights);
double certificate_gap(const Vector& p, const FitnessLandscape& landscape, const FiniteEnv& env);

// Maximizes gamma(p) = sum_e w_e log m_{p,e} over the simplex. Throws
// std::domain_error when some environment with positive weight has an
// all-zero column. A run that exhausts max_iter returns the best iterate
// with converged = false.
OptimizationResult optimize_no_sensing(const FitnessLandscape& landscape, const Vector& weights,
                                       const SolverOptions& options = {});
OptimizationResult optimize_no_sensing(const FitnessLandscape& landscape, const FiniteEnv& env,
                                       const SolverOptions& options = {});

bool pure_optimal(Index trait, const FitnessLandscape& landscape, const Vector& weights, double tol = 1e-8);
bool pure_optimal(Index trait, const FitnessLandscape& landscape, const FiniteEnv& env, double tol = 1e-8);

// Explicit solution for two traits and two environments. Falls back to
// optimize_no_sensing when the interior formula is degenerate.
OptimizationResult optimize_2x2_closed_form(const FitnessLandscape& landscape, const Vector& weights,
                                            const SolverOptions& options = {});
OptimizationResult optimize_2x2_closed_form(const FitnessLandscape& landscape, const FiniteEnv& env,
                                            const SolverOptions& options = {});

// One no-sensing problem per parent state e1 under the conditional law of
// the next state; gamma** = sum_{e1} nu1(e1) gamma*(nu_{e1}).
OptimizationResult optimize_sensing(const FitnessLandscape& landscape, const FiniteEnv& env,
                                    const SolverOptions& options = {});

struct SurvivalQuery {
  Strategy strategy;
  bool in_survival_set = false;  // rate > 0
  double rate = 0.0;
  // Every pure (or, with sensing, pure-per-state) strategy has rate <= 0 while
  // the optimum is positive.
  bool polymorphism_required = false;
};

SurvivalQuery survival_query(const Vector& p, const FitnessLandscape& landscape, const FiniteEnv& env,
                             const SolverOptions& options = {});
SurvivalQuery survival_query(const Strategy& strategy, const FitnessLandscape& landscape, const FiniteEnv& env,
                             const SolverOptions& options = {});

}  // namespace mbpre
