#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "whipflow/regularized_map.hpp"
#include "whipflow/state.hpp"

namespace whipflow {

enum class Scheme { implicit_euler };

struct StepperConfig {
  double dt_init = 1e-3;
  double dt_min = 1e-10;
  double dt_max = 1e-2;
  /// Infinity-norm tolerance on the nodal residual.
  double newton_tol = 1e-10;
  int newton_max_iter = 25;
  Scheme scheme = Scheme::implicit_euler;

  void validate() const;
};

/// Nodal residual of one backward-Euler step from `prev` to `state`.
///
/// Interior node i:  (eta_i - prev_i)/dt - (G(u_{i+1/2}) - G(u_{i-1/2}))/h - g.
/// Node 0 closes its half cell [0, h/2] with zero flux at s = 0, so its
/// divergence term is G(u_{1/2}) / (h/2). The last row is eta_N itself.
VecField residual(const ArcState& state, const ArcState& prev, double dt, const RegularizedMap& map,
                  const GravitySpec& gravity);

/// Discrete regularized energy: midpoint sum of Gtilde(u) plus the
/// trapezoid potential energy. The implicit step is the minimizer of
/// this energy plus the proximal term |eta - prev|^2 / (2 dt).
double discrete_energy(const ArcState& state, const RegularizedMap& map, const GravitySpec& gravity);

struct StepStats {
  int newton_iters = 0;
  double residual_inf = 0.0;
  double step_inf = 0.0;
  bool converged = false;
  bool stalled = false;
};

/// Either an accepted state or a rejection (no partial state).
struct StepOutcome {
  std::optional<ArcState> state;
  StepStats stats;
};

/// One implicit Euler step solved by damped Newton on the step's convex
/// merit function, with the exact block-tridiagonal Hessian.
StepOutcome step(const ArcState& prev, double dt, const RegularizedMap& map,
                 const GravitySpec& gravity, const StepperConfig& cfg);

struct AcceptedStepInfo {
  double dt = 0.0;
  int newton_iters = 0;
  double residual_inf = 0.0;
  int rejections = 0;  ///< rejections immediately preceding this step
};

using StepObserver = std::function<void(const ArcState&, const AcceptedStepInfo&)>;

struct EvolveStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::vector<double> dt_history;
  std::vector<int> newton_history;
};

/// Adaptive time loop to `horizon`: halve dt on rejection, grow by 1.2 after
/// easy steps, clamp to [dt_min, dt_max]. Throws SolverFailure when dt drops
/// below dt_min.
ArcState evolve(const ArcState& init, double horizon, const RegularizedMap& map,
                const GravitySpec& gravity, const StepperConfig& cfg,
                const StepObserver& observer = {}, EvolveStats* stats = nullptr);

}  // namespace whipflow
