#include "whipflow/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "whipflow/errors.hpp"

namespace whipflow {

namespace {

constexpr struct {
  ScenarioKind kind;
  const char* name;
} kNames[] = {
    {ScenarioKind::vertical_down, "vertical_down"},   {ScenarioKind::vertical_up, "vertical_up"},
    {ScenarioKind::straight_angle, "straight_angle"}, {ScenarioKind::quarter_circle, "quarter_circle"},
    {ScenarioKind::helix, "helix"},                   {ScenarioKind::random_lipschitz, "random_lipschitz"},
};

// Positions from midpoint tangents, integrated from the pin.
VecField integrate_from_pin(const Grid& grid, const VecField& u, int dim) {
  const std::size_t n = grid.n_cells();
  VecField p(n + 1, Vec::Zero(dim));
  for (std::size_t i = n; i-- > 0;) p[i] = p[i + 1] - grid.h() * u[i];
  return p;
}

double smoothstep5(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return x * x * x * (x * (6.0 * x - 15.0) + 10.0);
}

// Node value of the extension: even about s = 0, odd about s = 1.
Vec extended(const VecField& p, long j, long n) {
  const long period = 4 * n;
  j %= period;
  if (j < 0) j += period;
  // One period of the extension: [0, n] data, [n, 2n] odd image, [2n, 4n] even image.
  if (j > 2 * n) j = period - j;
  if (j <= n) return p[static_cast<std::size_t>(j)];
  return -p[static_cast<std::size_t>(2 * n - j)];
}

}  // namespace

std::string to_string(ScenarioKind kind) {
  for (const auto& e : kNames) {
    if (e.kind == kind) return e.name;
  }
  return "unknown";
}

ScenarioKind scenario_kind_from_string(const std::string& name) {
  for (const auto& e : kNames) {
    if (name == e.name) return e.kind;
  }
  throw std::invalid_argument("unknown scenario '" + name + "'");
}

ArcState build(const ScenarioSpec& spec, const Grid& grid, const GravitySpec& gravity) {
  const int d = gravity.dim();
  const Vec& g = gravity.g();
  const std::vector<Vec> frame = orthogonal_frame(gravity);
  const Vec& e1 = frame.front();
  const std::size_t n = grid.n_cells();
  VecField p(n + 1, Vec::Zero(d));

  switch (spec.kind) {
    case ScenarioKind::vertical_down:
      for (std::size_t i = 0; i < n; ++i) p[i] = (1.0 - grid.node(i)) * g;
      break;
    case ScenarioKind::vertical_up:
      for (std::size_t i = 0; i < n; ++i) p[i] = (grid.node(i) - 1.0) * g;
      break;
    case ScenarioKind::straight_angle: {
      if (!std::isfinite(spec.alpha)) throw std::invalid_argument("straight_angle: non-finite alpha");
      const Vec u = -std::cos(spec.alpha) * g + std::sin(spec.alpha) * e1;
      for (std::size_t i = 0; i < n; ++i) p[i] = -(1.0 - grid.node(i)) * u;
      break;
    }
    case ScenarioKind::quarter_circle:
      // u(s) = cos(theta) e1 - sin(theta) g with theta = (pi/2)(1 - s), integrated exactly.
      for (std::size_t i = 0; i < n; ++i) {
        const double theta = 0.5 * std::numbers::pi * (1.0 - grid.node(i));
        p[i] = -(2.0 / std::numbers::pi) * (std::sin(theta) * e1 - (1.0 - std::cos(theta)) * g);
      }
      break;
    case ScenarioKind::helix: {
      if (d != 3) throw DimensionError("helix scenario needs d = 3");
      if (!(spec.eps_geom > 0.0)) throw std::invalid_argument("helix: eps_geom must be positive");
      const Vec& e2 = frame.at(1);
      const double e = spec.eps_geom;
      const double sa = std::sin(spec.alpha0), ca = std::cos(spec.alpha0);
      for (std::size_t i = 0; i < n; ++i) {
        const double s = grid.node(i);
        p[i] = e * sa * (std::cos(s / e) - std::cos(1.0 / e)) * e1 +
               e * sa * (std::sin(s / e) - std::sin(1.0 / e)) * e2 - (s - 1.0) * ca * g;
      }
      break;
    }
    case ScenarioKind::random_lipschitz: {
      std::mt19937_64 rng(spec.seed);
      std::normal_distribution<double> normal(0.0, 1.0);
      const double kick = std::sqrt(grid.h()) * 2.0;
      VecField u(n);
      Vec cur(d);
      for (int k = 0; k < d; ++k) cur[k] = normal(rng);
      cur.normalize();
      for (std::size_t i = 0; i < n; ++i) {
        Vec next = cur;
        for (int k = 0; k < d; ++k) next[k] += kick * normal(rng);
        const double norm = next.norm();
        if (norm > 0.0) cur = next / norm;
        u[i] = cur;
      }
      p = integrate_from_pin(grid, u, d);
      break;
    }
  }
  p[n].setZero();
  return ArcState(grid, std::move(p), 0.0);
}

ArcState mollify(const ArcState& state, const ScenarioSpec& spec) {
  state.validate();
  const Grid& grid = state.grid;
  const double h = grid.h();
  if (!(spec.mollify_radius >= 2.0 * h) || !(spec.taper_width >= 2.0 * h)) {
    std::ostringstream msg;
    msg << "mollify: radius " << spec.mollify_radius << " and taper width " << spec.taper_width
        << " must both be at least 2h = " << 2.0 * h;
    throw UnderResolvedError(msg.str());
  }
  if (!(spec.slope_cap > 0.0)) throw std::invalid_argument("mollify: slope_cap must be positive");
  const long n = static_cast<long>(grid.n_cells());
  const long half = static_cast<long>(std::floor(spec.mollify_radius / h));
  std::vector<double> w(2 * half + 1);
  double total = 0.0;
  for (long k = -half; k <= half; ++k) {
    const double r = static_cast<double>(k) * h / spec.mollify_radius;
    const double b = std::max(0.0, 1.0 - r * r);
    w[k + half] = b * b * b * b;
    total += w[k + half];
  }
  for (double& x : w) x /= total;

  const int d = state.dim();
  VecField smooth(n + 1, Vec::Zero(d));
  for (long i = 0; i <= n; ++i) {
    Vec acc = Vec::Zero(d);
    for (long k = -half; k <= half; ++k) acc += w[k + half] * extended(state.positions, i + k, n);
    smooth[i] = acc;
  }
  smooth[n].setZero();

  VecField u = diff_forward(grid, smooth);
  double sup = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] *= smoothstep5(grid.midpoint(i) / spec.taper_width);
    sup = std::max(sup, u[i].norm());
  }
  if (sup > spec.slope_cap) {
    for (Vec& v : u) v *= spec.slope_cap / sup;
  }
  return ArcState(grid, integrate_from_pin(grid, u, d), state.time);
}

Trajectory backward_transform(const Trajectory& forward, const GravitySpec& g) {
  if (!(forward.gravity == g.reversed())) {
    throw ContractError("backward_transform: forward trajectory must be computed under -g");
  }
  Trajectory out(g);
  out.frames.reserve(forward.frames.size());
  for (auto it = forward.frames.rbegin(); it != forward.frames.rend(); ++it) {
    ScalarField sig = it->tension.values;
    for (double& x : sig) x = -x;
    out.frames.push_back(Frame{ArcState(it->state.grid, it->state.positions, -it->state.time),
                               TensionProfile(it->tension.grid, std::move(sig))});
  }
  return out;
}

Trajectory record_trajectory(const ArcState& init, double horizon, const RegularizedMap& map,
                             const GravitySpec& gravity, const StepperConfig& cfg, double frame_spacing) {
  Trajectory traj(gravity);
  traj.frames.push_back(Frame{init, flux_tension(init, map)});
  double last = init.time;
  const ArcState final_state =
      evolve(init, horizon, map, gravity, cfg, [&](const ArcState& s, const AcceptedStepInfo&) {
        if (s.time - last >= frame_spacing * (1.0 - 1e-9)) {
          traj.frames.push_back(Frame{s, flux_tension(s, map)});
          last = s.time;
        }
      });
  if (traj.frames.back().state.time != final_state.time) {
    traj.frames.push_back(Frame{final_state, flux_tension(final_state, map)});
  }
  return traj;
}

BranchingResult branching_pair(double horizon, const RegularizedMap& map, const Grid& grid,
                               const GravitySpec& gravity, const StepperConfig& cfg,
                               const ScenarioSpec& mollifier, double frame_spacing) {
  if (!(horizon > 0.0)) throw std::invalid_argument("branching_pair: horizon must be positive");
  ScenarioSpec up = mollifier;
  up.kind = ScenarioKind::vertical_up;
  const ArcState upright = build(up, grid, gravity);
  const ArcState start = mollify(upright, up);

  BranchingResult out{record_trajectory(start, horizon, map, gravity, cfg, frame_spacing),
                      Trajectory(gravity), {}, {}, 0.0};

  ScalarField sig(grid.n_nodes());
  for (std::size_t i = 0; i < sig.size(); ++i) sig[i] = -grid.node(i);
  for (const Frame& f : out.forward.frames) {
    out.stationary.frames.push_back(
        Frame{ArcState(grid, upright.positions, f.state.time), TensionProfile(grid, sig)});
  }
  out.forward_residual = generalized_residual(out.forward);
  out.stationary_residual = generalized_residual(out.stationary);
  out.separation = l2_distance(out.forward.frames.back().state, out.stationary.frames.back().state);
  return out;
}

}  // namespace whipflow
