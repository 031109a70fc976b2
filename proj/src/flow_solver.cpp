#include "whipflow/flow_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "whipflow/errors.hpp"
#include "whipflow/tridiagonal.hpp"

namespace whipflow {

void StepperConfig::validate() const {
  if (!(dt_min > 0.0 && dt_min <= dt_init && dt_init <= dt_max) || !std::isfinite(dt_max)) {
    throw std::invalid_argument("StepperConfig: require 0 < dt_min <= dt_init <= dt_max");
  }
  if (!(newton_tol > 0.0) || newton_max_iter < 1) {
    throw std::invalid_argument("StepperConfig: invalid Newton settings");
  }
}

namespace {

// Trapezoid weight of node j (the pinned node is not an unknown).
inline double node_weight(std::size_t j) { return j == 0 ? 0.5 : 1.0; }

void check_pair(const ArcState& state, const ArcState& prev, const RegularizedMap& map,
                const GravitySpec& gravity) {
  if (!(state.grid == prev.grid)) throw ShapeError("flow_solver: states on different grids");
  require_length(state.positions.size(), prev.positions.size(), "flow_solver");
  if (state.dim() != map.dim() || prev.dim() != map.dim() || gravity.dim() != map.dim()) {
    throw ShapeError("flow_solver: dimension mismatch between state, map and gravity");
  }
}

// Everything the Newton iteration needs at one iterate.
struct Linearization {
  VecField flux;          // G(u) per cell
  std::vector<Mat> jac;   // grad G(u) per cell
  VecField gradient;      // merit gradient per unknown node
  double merit = 0.0;
  double residual_inf = 0.0;
};

class StepProblem {
 public:
  StepProblem(const ArcState& prev, double dt, const RegularizedMap& map, const GravitySpec& gravity)
      : prev_(prev), dt_(dt), map_(map), g_(gravity.g()), n_(prev.grid.n_cells()),
        h_(prev.grid.h()) {}

  std::size_t unknowns() const { return n_; }

  Linearization linearize(const VecField& eta) const {
    Linearization lin;
    lin.flux.resize(n_);
    lin.jac.resize(n_);
    double potential = 0.0;
    const double inv_h = static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      const Vec u = (eta[i + 1] - eta[i]) * inv_h;
      if (!u.allFinite()) throw NumericDomainError("step: non-finite tangent");
      RegularizedMap::Evaluation ev = map_.evaluate(u);
      lin.flux[i] = std::move(ev.G);
      lin.jac[i] = std::move(ev.jacobian);
      potential += ev.potential;
    }
    double merit = h_ * potential;
    lin.gradient.resize(n_);
    lin.residual_inf = 0.0;
    for (std::size_t j = 0; j < n_; ++j) {
      const double wh = node_weight(j) * h_;
      const Vec disp = eta[j] - prev_.positions[j];
      merit += wh * (-g_.dot(eta[j]) + disp.squaredNorm() / (2.0 * dt_));
      Vec grad = wh * (disp / dt_ - g_) - lin.flux[j];
      if (j > 0) grad += lin.flux[j - 1];
      lin.residual_inf = std::max(lin.residual_inf, grad.cwiseAbs().maxCoeff() / wh);
      lin.gradient[j] = std::move(grad);
    }
    lin.merit = merit;
    return lin;
  }

  VecField newton_direction(const Linearization& lin) const {
    const int d = map_.dim();
    std::vector<Mat> diag(n_);
    std::vector<Mat> off(n_ > 0 ? n_ - 1 : 0);
    const double inv_h = static_cast<double>(n_);
    for (std::size_t j = 0; j < n_; ++j) {
      Mat block = (node_weight(j) * h_ / dt_) * Mat::Identity(d, d);
      block.noalias() += lin.jac[j] * inv_h;
      if (j > 0) block.noalias() += lin.jac[j - 1] * inv_h;
      diag[j] = std::move(block);
      if (j + 1 < n_) off[j] = -lin.jac[j] * inv_h;
    }
    VecField rhs(n_);
    for (std::size_t j = 0; j < n_; ++j) rhs[j] = -lin.gradient[j];
    return solve_block_tridiagonal(diag, off, rhs);
  }

 private:
  const ArcState& prev_;
  double dt_;
  const RegularizedMap& map_;
  const Vec& g_;
  std::size_t n_;
  double h_;
};

double dot_fields(const VecField& a, const VecField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].dot(b[i]);
  return s;
}

}  // namespace

VecField residual(const ArcState& state, const ArcState& prev, double dt, const RegularizedMap& map,
                  const GravitySpec& gravity) {
  check_pair(state, prev, map, gravity);
  if (!(dt > 0.0)) throw std::invalid_argument("residual: dt must be positive");
  const std::size_t n = state.grid.n_cells();
  const double h = state.grid.h();
  VecField flux(n);
  const VecField u = state.tangents();
  for (std::size_t i = 0; i < n; ++i) {
    flux[i] = map.apply_G(u[i]);
  }
  VecField out(n + 1);
  for (std::size_t j = 0; j < n; ++j) {
    const double wh = node_weight(j) * h;
    Vec div = flux[j];
    if (j > 0) div -= flux[j - 1];
    out[j] = (state.positions[j] - prev.positions[j]) / dt - div / wh - gravity.g();
    if (!out[j].allFinite()) throw NumericDomainError("residual: non-finite value");
  }
  out[n] = state.positions[n];
  return out;
}

double discrete_energy(const ArcState& state, const RegularizedMap& map, const GravitySpec& gravity) {
  const VecField u = state.tangents();
  double potential = 0.0;
  for (const Vec& v : u) potential += map.potential_Gtilde(v);
  ScalarField lin(state.positions.size());
  for (std::size_t i = 0; i < lin.size(); ++i) lin[i] = -gravity.g().dot(state.positions[i]);
  return state.grid.h() * potential + quad_trapezoid(state.grid, lin);
}

StepOutcome step(const ArcState& prev, double dt, const RegularizedMap& map,
                 const GravitySpec& gravity, const StepperConfig& cfg) {
  check_pair(prev, prev, map, gravity);
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("step: dt must be positive");

  StepProblem problem(prev, dt, map, gravity);
  const std::size_t n = problem.unknowns();
  VecField eta = prev.positions;
  eta[n].setZero();

  StepOutcome out;
  StepStats& stats = out.stats;
  Linearization lin = problem.linearize(eta);
  double best_residual = lin.residual_inf;
  int plateau = 0;
  constexpr double kArmijo = 1e-4;
  constexpr int kMaxBacktracks = 40;
  constexpr int kPlateauLimit = 5;

  for (int it = 0;; ++it) {
    stats.residual_inf = lin.residual_inf;
    stats.newton_iters = it;
    if (lin.residual_inf <= cfg.newton_tol) {
      stats.converged = true;
      break;
    }
    if (it >= cfg.newton_max_iter) break;

    const VecField dir = problem.newton_direction(lin);
    const double slope = dot_fields(lin.gradient, dir);
    double step_inf = 0.0;
    for (const Vec& v : dir) step_inf = std::max(step_inf, v.cwiseAbs().maxCoeff());

    // Armijo backtracking on the merit. Close to the root the merit change
    // drops below its rounding error, so a full step that does not raise
    // the merit beyond that noise is always taken.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(lin.merit));
    double alpha = 1.0;
    bool accepted = false;
    Linearization trial;
    VecField candidate(eta.size());
    for (int bt = 0; bt <= kMaxBacktracks; ++bt) {
      for (std::size_t j = 0; j < n; ++j) candidate[j] = eta[j] + alpha * dir[j];
      candidate[n] = eta[n];
      trial = problem.linearize(candidate);
      if (trial.merit <= lin.merit + kArmijo * alpha * slope ||
          (alpha == 1.0 && trial.merit <= lin.merit + noise)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;

    eta.swap(candidate);
    lin = std::move(trial);
    stats.step_inf = alpha * step_inf;

    // A full Newton correction at rounding level of the positions means the
    // residual has reached its floor, which grows like eps_mach * Lambda / h^2.
    if (alpha == 1.0 && stats.step_inf <= cfg.newton_tol * prev.grid.h()) {
      stats.residual_inf = lin.residual_inf;
      stats.newton_iters = it + 1;
      stats.converged = true;
      break;
    }

    if (lin.residual_inf < 0.9 * best_residual) {
      best_residual = lin.residual_inf;
      plateau = 0;
    } else if (++plateau >= kPlateauLimit) {
      stats.residual_inf = lin.residual_inf;
      stats.newton_iters = it + 1;
      stats.stalled = true;
      break;
    }
  }

  if (stats.converged) {
    out.state.emplace(prev.grid, std::move(eta), prev.time + dt);
  }
  return out;
}

ArcState evolve(const ArcState& init, double horizon, const RegularizedMap& map,
                const GravitySpec& gravity, const StepperConfig& cfg, const StepObserver& observer,
                EvolveStats* stats) {
  cfg.validate();
  init.validate();
  if (!(horizon >= init.time)) throw std::invalid_argument("evolve: horizon precedes initial time");
  ArcState state = init;
  double dt = cfg.dt_init;
  int rejections = 0;
  while (horizon - state.time > 0.5 * cfg.dt_min) {
    const double remaining = horizon - state.time;
    double trial = std::min(dt, remaining);
    bool final_step = trial == remaining;
    // Avoid leaving a sliver shorter than dt_min at the end.
    if (!final_step && remaining - trial < cfg.dt_min) {
      trial = remaining;
      final_step = true;
    }
    StepOutcome outcome = step(state, trial, map, gravity, cfg);
    if (!outcome.state) {
      ++rejections;
      if (stats) ++stats->rejected;
      dt = 0.5 * trial;
      if (dt < cfg.dt_min) {
        std::ostringstream msg;
        msg << "evolve: step rejected at t=" << state.time << " with dt=" << trial
            << " (newton_iters=" << outcome.stats.newton_iters
            << ", residual_inf=" << outcome.stats.residual_inf
            << ", stalled=" << (outcome.stats.stalled ? "yes" : "no")
            << "); dt would fall below dt_min=" << cfg.dt_min;
        throw SolverFailure(msg.str());
      }
      continue;
    }
    state = std::move(*outcome.state);
    if (final_step) state.time = horizon;
    AcceptedStepInfo info{trial, outcome.stats.newton_iters, outcome.stats.residual_inf, rejections};
    rejections = 0;
    if (stats) {
      ++stats->accepted;
      stats->dt_history.push_back(trial);
      stats->newton_history.push_back(outcome.stats.newton_iters);
    }
    if (observer) observer(state, info);
    if (outcome.stats.newton_iters <= 4) {
      dt = std::min(1.2 * std::max(dt, trial), cfg.dt_max);
    } else if (!final_step) {
      dt = trial;
    }
    dt = std::clamp(dt, cfg.dt_min, cfg.dt_max);
  }
  return state;
}

}  // namespace whipflow
