#include "whipflow/tension_bvp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "whipflow/errors.hpp"
#include "whipflow/tridiagonal.hpp"

namespace whipflow {

TensionProfile::TensionProfile(Grid g, ScalarField v) : grid(g), values(std::move(v)) {
  require_length(values.size(), grid.n_nodes(), "TensionProfile");
}

void GeodesicTensionProblem::validate() const {
  require_length(curvature_sq.size(), grid.n_nodes(), "GeodesicTensionProblem.curvature_sq");
  require_length(speed_sq.size(), grid.n_nodes(), "GeodesicTensionProblem.speed_sq");
  if (!std::isfinite(neumann_value)) throw NumericDomainError("tension: non-finite Neumann value");
  for (std::size_t i = 0; i < curvature_sq.size(); ++i) {
    if (!std::isfinite(curvature_sq[i]) || curvature_sq[i] < 0.0 || !std::isfinite(speed_sq[i]) ||
        speed_sq[i] < 0.0) {
      throw NumericDomainError("tension: coefficients must be finite and nonnegative (node " +
                               std::to_string(i) + ")");
    }
  }
}

TensionProfile solve_tension(const GeodesicTensionProblem& problem) {
  problem.validate();
  const std::size_t n = problem.grid.n_cells();
  const double h = problem.grid.h();
  const double h2 = h * h;
  // Unknowns sigma_1 .. sigma_N, row k <-> node k+1; rows scaled by h^2.
  ScalarField lower(n, 1.0), diag(n), upper(n, 1.0), rhs(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = k + 1;
    diag[k] = -(2.0 + h2 * problem.curvature_sq[i]);
    rhs[k] = -h2 * problem.speed_sq[i];
  }
  lower[n - 1] = 2.0;
  rhs[n - 1] -= 2.0 * h * problem.neumann_value;
  const ScalarField x = solve_tridiagonal(lower, diag, upper, rhs);
  ScalarField values(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) values[k + 1] = x[k];
  return TensionProfile(problem.grid, std::move(values));
}

ScalarField curvature_sq(const ArcState& state) {
  const std::size_t n = state.grid.n_cells();
  if (n < 2) throw ShapeError("curvature_sq: need at least 3 nodes");
  const auto& p = state.positions;
  const double inv_h2 = 1.0 / (state.grid.h() * state.grid.h());
  ScalarField out(n + 1);
  for (std::size_t i = 1; i < n; ++i) {
    out[i] = ((p[i - 1] - 2.0 * p[i] + p[i + 1]) * inv_h2).squaredNorm();
  }
  if (n >= 3) {
    out[0] = ((2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3]) * inv_h2).squaredNorm();
    out[n] = ((2.0 * p[n] - 5.0 * p[n - 1] + 4.0 * p[n - 2] - p[n - 3]) * inv_h2).squaredNorm();
  } else {
    out[0] = out[1];
    out[n] = out[1];
  }
  return out;
}

Vec boundary_tangent(const ArcState& state) {
  const std::size_t n = state.grid.n_cells();
  if (n < 2) throw ShapeError("boundary_tangent: need at least 3 nodes");
  const auto& p = state.positions;
  return (3.0 * p[n] - 4.0 * p[n - 1] + p[n - 2]) / (2.0 * state.grid.h());
}

double boundary_cos_alpha(const ArcState& state, const GravitySpec& gravity) {
  if (state.dim() != gravity.dim()) throw ShapeError("boundary_cos_alpha: dimension mismatch");
  const Vec u = boundary_tangent(state);
  const double norm = u.norm();
  if (!(norm > 0.0)) throw NumericDomainError("boundary_cos_alpha: degenerate end tangent");
  return std::clamp(-gravity.g().dot(u) / norm, -1.0, 1.0);
}

double boundary_curvature(const ArcState& state) { return std::sqrt(curvature_sq(state).back()); }

TensionProfile tension_for_state(const ArcState& state, const GravitySpec& gravity) {
  GeodesicTensionProblem problem{state.grid, curvature_sq(state),
                                 ScalarField(state.grid.n_nodes(), 0.0),
                                 boundary_cos_alpha(state, gravity)};
  return solve_tension(problem);
}

CounterexampleResult counterexample_tension(double eps, double alpha0, std::size_t n_cells) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw std::invalid_argument("counterexample: eps must be positive");
  if (!(alpha0 > 0.0 && alpha0 < std::numbers::pi)) {
    throw std::invalid_argument("counterexample: alpha0 must lie in (0, pi)");
  }
  const Grid grid(n_cells);
  const double sa = std::sin(alpha0);
  const double a = sa / eps;
  if (a * a * grid.h() * grid.h() > 1e4) {
    std::ostringstream msg;
    msg << "counterexample: under-resolved, (a h)^2 = " << a * a * grid.h() * grid.h()
        << " > 1e4 with a = " << a;
    throw UnderResolvedError(msg.str());
  }
  // eta(s) = (eps sa (cos(s/eps) - cos(1/eps)), eps sa (sin(s/eps) - sin(1/eps)), (s-1) ca)
  // v(s)   = (eps ca (cos(s/eps) - cos(1/eps)), eps ca (sin(s/eps) - sin(1/eps)), (1-s) sa)
  const double ca = std::cos(alpha0);
  ScalarField curv(grid.n_nodes()), speed(grid.n_nodes());
  for (std::size_t i = 0; i < grid.n_nodes(); ++i) {
    const double s = grid.node(i);
    const double c = std::cos(s / eps), sn = std::sin(s / eps);
    const Vec ess = (Vec(3) << -sa / eps * c, -sa / eps * sn, 0.0).finished();
    const Vec vs = (Vec(3) << -ca * sn, ca * c, -sa).finished();
    curv[i] = ess.squaredNorm();
    speed[i] = vs.squaredNorm();
  }
  const TensionProfile sol = solve_tension(GeodesicTensionProblem{grid, curv, speed, 0.0});
  const double bound = eps * eps / (sa * sa);
  const double v1 = sol.at_end();
  return CounterexampleResult{v1, bound, v1 / bound};
}

}  // namespace whipflow
