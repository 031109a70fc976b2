#pragma once

#include <cstddef>

#include "whipflow/grid.hpp"
#include "whipflow/state.hpp"

namespace whipflow {

/// Node-sampled tension sigma (or varsigma); values[0] = 0.
struct TensionProfile {
  Grid grid;
  ScalarField values;

  TensionProfile(Grid g, ScalarField v);
  double at_end() const { return values.back(); }
};

/// Two-point problem  sigma'' - c sigma + f = 0,  sigma(0) = 0,  sigma'(1) = q.
struct GeodesicTensionProblem {
  Grid grid;
  ScalarField curvature_sq;  ///< c >= 0 at nodes
  ScalarField speed_sq;      ///< f >= 0 at nodes; zero for the gradient-flow tension
  double neumann_value = 0.0;

  void validate() const;
};

/// Central differences inside; at s = 1 the ghost value sigma_{N+1} =
/// sigma_{N-1} + 2 h q is eliminated, keeping the matrix tridiagonal.
TensionProfile solve_tension(const GeodesicTensionProblem& problem);

/// |eta_ss|^2 at every node. Boundary nodes use one-sided second-order
/// second differences (first-order on grids with fewer than four nodes).
ScalarField curvature_sq(const ArcState& state);

/// Tangent at s = 1 from the one-sided stencil (3 eta_N - 4 eta_{N-1} + eta_{N-2}) / 2h.
Vec boundary_tangent(const ArcState& state);

/// cos of the angle between the end tangent and -g, i.e. -g.u(1)/|u(1)|.
double boundary_cos_alpha(const ArcState& state, const GravitySpec& gravity);

/// Curvature of the second derivative at s = 1.
double boundary_curvature(const ArcState& state);

/// Gradient-flow tension of a shape: f = 0, q = cos alpha.
TensionProfile tension_for_state(const ArcState& state, const GravitySpec& gravity);

struct CounterexampleResult {
  double varsigma_at_1;
  double bound;  ///< eps^2 / sin^2 alpha0
  double ratio;
};

/// Tension of the helix data with the unit-speed velocity field, solved on
/// `n_cells` cells. Refuses (UnderResolvedError) if (a h)^2 > 1e4 with
/// a = sin(alpha0)/eps.
CounterexampleResult counterexample_tension(double eps, double alpha0, std::size_t n_cells = 2000);

}  // namespace whipflow
