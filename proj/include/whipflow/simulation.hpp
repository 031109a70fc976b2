#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "whipflow/flow_solver.hpp"
#include "whipflow/run_io.hpp"
#include "whipflow/scenarios.hpp"

namespace whipflow {

struct SimulationConfig {
  ScenarioSpec scenario;
  bool mollify = true;
  int dim = 2;
  double eps = 1e-2;
  std::size_t n_cells = 200;
  double horizon = 1.0;
  StepperConfig stepper;
  std::vector<double> snapshot_times;

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are rejected.
  static SimulationConfig from_json(const nlohmann::json& j);
};

/// Everything measured along one evolution.
struct SimulationResult {
  RunRecord record;
  ArcState initial;
  ArcState final_state;
  std::vector<EnergyReport> reports;
  /// sum over steps of dt * int |(eta^{k+1} - eta^k)/dt|^2
  double dissipation = 0.0;
  /// largest increase of the discrete energy across one accepted step
  double max_energy_increase = 0.0;
  /// running sup of |u| over all accepted states, initial state included
  double sup_tangent = 0.0;
  bool failed = false;
};

double sup_tangent_norm(const ArcState& state);

/// Builds (and optionally mollifies) the scenario, evolves it, and fills a
/// RunRecord with one row per accepted step plus the requested snapshots. On
/// SolverFailure the partial record is returned with `failed` set.
SimulationResult simulate(const SimulationConfig& cfg);

/// Trapezoid time average of constraint_L1 over the report series.
double time_averaged_constraint(const std::vector<EnergyReport>& reports);

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace whipflow
