#include "whipflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "whipflow/errors.hpp"
#include "whipflow/flow_solver.hpp"

namespace whipflow {

namespace {

void check_gravity(const ArcState& state, const GravitySpec& gravity, const char* what) {
  if (state.dim() != gravity.dim()) {
    throw ShapeError(std::string(what) + ": state and gravity dimensions differ");
  }
}

// Trapezoid weight of node i.
inline double node_weight(std::size_t i, std::size_t n) { return (i == 0 || i == n) ? 0.5 : 1.0; }

// Divergence of the node-tension flux sigma_bar u at every unpinned node;
// node 0 closes its half cell with zero flux at s = 0.
VecField flux_divergence(const ArcState& state, const TensionProfile& tension) {
  const std::size_t n = state.grid.n_cells();
  const double h = state.grid.h();
  const VecField u = state.tangents();
  VecField flux(n);
  for (std::size_t i = 0; i < n; ++i) {
    flux[i] = 0.5 * (tension.values[i] + tension.values[i + 1]) * u[i];
  }
  VecField div(n);
  div[0] = flux[0] / (0.5 * h);
  for (std::size_t i = 1; i < n; ++i) div[i] = (flux[i] - flux[i - 1]) / h;
  return div;
}

}  // namespace

double equilibrium_energy() {
  static const double value = [] {
    const Grid grid(8);
    const GravitySpec g = GravitySpec::down(2);
    VecField p(grid.n_nodes());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = (1.0 - grid.node(i)) * g.g();
    const double e = potential_energy(ArcState(grid, std::move(p)), g);
    if (std::abs(e + 0.5) > 1e-15) throw std::logic_error("equilibrium energy check failed");
    return -0.5;
  }();
  return value;
}

double potential_energy(const ArcState& state, const GravitySpec& gravity) {
  check_gravity(state, gravity, "potential_energy");
  ScalarField values(state.positions.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = -gravity.g().dot(state.positions[i]);
  return quad_trapezoid(state.grid, values);
}

TensionProfile flux_tension(const ArcState& state, const RegularizedMap& map) {
  const std::size_t n = state.grid.n_cells();
  const VecField u = state.tangents();
  ScalarField mid(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u2 = u[i].squaredNorm();
    mid[i] = u2 > 0.0 ? map.apply_G(u[i]).dot(u[i]) / u2 : 0.0;
  }
  ScalarField values(n + 1, 0.0);
  for (std::size_t i = 1; i < n; ++i) values[i] = 0.5 * (mid[i - 1] + mid[i]);
  values[n] = n >= 2 ? std::max(0.0, 1.5 * mid[n - 1] - 0.5 * mid[n - 2]) : mid[0];
  return TensionProfile(state.grid, std::move(values));
}

EnergyReport report(const ArcState& state, const RegularizedMap& map, const GravitySpec& gravity) {
  state.validate();
  check_gravity(state, gravity, "report");
  const Grid& grid = state.grid;
  const VecField u = state.tangents();
  EnergyReport r;
  r.t = state.time;
  r.E = potential_energy(state, gravity);
  ScalarField alt(u.size());
  ScalarField constraint(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    alt[i] = grid.midpoint(i) * gravity.g().dot(u[i]);
    const double norm = u[i].norm();
    r.max_stretch = std::max(r.max_stretch, std::abs(norm - 1.0));
    constraint[i] = map.apply_G(u[i]).norm() * std::abs(norm * norm - 1.0);
  }
  r.E_alt = quad_midpoint(grid, alt);
  r.E_rel = r.E - equilibrium_energy();
  r.E_rel_back = -equilibrium_energy() - r.E;
  r.E_eps = discrete_energy(state, map, gravity);
  r.constraint_L1 = quad_midpoint(grid, constraint);
  r.cos_alpha = boundary_cos_alpha(state, gravity);
  r.D = 1.0 - tension_for_state(state, gravity).at_end() * r.cos_alpha;
  r.sigma_at_1 = flux_tension(state, map).at_end();
  return r;
}

GeneralizedResidual generalized_residual(const Trajectory& trajectory, TimeStencil stencil) {
  const auto& frames = trajectory.frames;
  if (frames.size() < 2) throw ContractError("generalized_residual: need at least 2 frames");
  const Grid grid = frames.front().state.grid;
  for (const Frame& f : frames) {
    if (!(f.state.grid == grid) || !(f.tension.grid == grid)) {
      throw ShapeError("generalized_residual: frames on different grids");
    }
    check_gravity(f.state, trajectory.gravity, "generalized_residual");
  }
  const std::size_t n = grid.n_cells();
  const double h = grid.h();
  const Vec& g = trajectory.gravity.g();

  std::vector<VecField> div(frames.size());
  std::vector<double> product(frames.size());
  GeneralizedResidual out;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    div[k] = flux_divergence(frames[k].state, frames[k].tension);
    const VecField u = frames[k].state.tangents();
    const ScalarField& sig = frames[k].tension.values;
    double p = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double norm = u[i].norm();
      const double q = 0.5 * (sig[i] + sig[i + 1]) * (norm * norm - 1.0);
      p += h * q * q;
      out.stretch_violation = std::max(out.stretch_violation, norm - 1.0);
    }
    product[k] = p;
  }

  double pde = 0.0;
  double constraint = 0.0;
  double slack = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
    const double dt = frames[k + 1].state.time - frames[k].state.time;
    if (!(dt > 0.0)) throw ContractError("generalized_residual: frame times must increase");
    double r2 = 0.0, work = 0.0, speed2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double w = node_weight(i, n) * h;
      const Vec vel = (frames[k + 1].state.positions[i] - frames[k].state.positions[i]) / dt;
      const Vec flux = stencil == TimeStencil::centered ? Vec(0.5 * (div[k][i] + div[k + 1][i]))
                                                        : div[k + 1][i];
      const Vec res = vel - flux - g;
      r2 += w * res.squaredNorm();
      work += w * g.dot(vel);
      speed2 += w * vel.squaredNorm();
    }
    pde += dt * r2;
    constraint += 0.5 * dt * (product[k] + product[k + 1]);
    slack = std::min(slack, work - speed2);
  }
  out.pde_residual_L2 = std::sqrt(pde);
  out.constraint_product_L2 = std::sqrt(constraint);
  out.stretch_violation = std::max(0.0, out.stretch_violation);
  out.diss_inequality_slack = slack;
  return out;
}

EnergyIdentity relative_energy_identity_check(const ArcState& state, const GravitySpec& gravity) {
  state.validate();
  check_gravity(state, gravity, "relative_energy_identity_check");
  const Grid& grid = state.grid;
  const VecField u = state.tangents();
  const Vec& g = gravity.g();
  ScalarField lhs(u.size()), rhs(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double s = grid.midpoint(i);
    // E_rel = int s g.u + 1/2, with 1/2 = int s.
    lhs[i] = s * (g.dot(u[i]) + 1.0);
    rhs[i] = 0.5 * s * (u[i] + g).squaredNorm() - 0.5 * s * (u[i].squaredNorm() - 1.0);
  }
  const double l = quad_midpoint(grid, lhs);
  const double r = quad_midpoint(grid, rhs);
  return EnergyIdentity{l, r, std::abs(l - r)};
}

double hardy_check(const Grid& grid, const VecField& samples) {
  require_length(samples.size(), grid.n_nodes(), "hardy_check");
  if (samples.front().squaredNorm() != 0.0) throw ContractError("hardy_check: samples[0] must be zero");
  double num = 0.0, den = 0.0;
  const double h = grid.h();
  for (std::size_t i = 0; i < grid.n_cells(); ++i) {
    const Vec mid = 0.5 * (samples[i] + samples[i + 1]);
    const Vec d = (samples[i + 1] - samples[i]) / h;
    num += h * mid.squaredNorm() / grid.midpoint(i);
    den += h * d.squaredNorm();
  }
  if (!(den > 0.0)) throw NumericDomainError("hardy_check: derivative vanishes identically");
  return num / den;
}

std::optional<std::pair<double, double>> energy_window(std::span<const EnergyReport> reports, double lo,
                                                       double hi) {
  if (reports.empty()) return std::nullopt;
  const double e0 = reports.front().E_rel;
  std::optional<double> start, end;
  for (const EnergyReport& r : reports) {
    if (!start && r.E_rel <= hi * e0) start = r.t;
    if (start && r.E_rel >= lo * e0) end = r.t;
  }
  if (!start || !end || *end < *start) return std::nullopt;
  return std::make_pair(*start, *end);
}

DecayFit decay_fit(std::span<const EnergyReport> reports, std::pair<double, double> window) {
  std::vector<double> ts, ys;
  double cbar = 0.0;
  for (const EnergyReport& r : reports) {
    if (r.t < window.first || r.t > window.second) continue;
    if (!(r.E_rel > 0.0)) {
      std::ostringstream msg;
      msg << "decay_fit: E_rel = " << r.E_rel << " <= 0 at t = " << r.t << " (already at equilibrium)";
      throw ContractError(msg.str());
    }
    ts.push_back(r.t);
    ys.push_back(std::log(r.E_rel));
    cbar = std::max(cbar, r.D > 0.0 ? r.E_rel / r.D : std::numeric_limits<double>::infinity());
  }
  if (ts.size() < 10) {
    throw ContractError("decay_fit: need at least 10 reports in the window, got " + std::to_string(ts.size()));
  }
  const double m = static_cast<double>(ts.size());
  double tm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    tm += ts[i];
    ym += ys[i];
  }
  tm /= m;
  ym /= m;
  double stt = 0.0, sty = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - tm) * (ts[i] - tm);
    sty += (ts[i] - tm) * (ys[i] - ym);
    syy += (ys[i] - ym) * (ys[i] - ym);
  }
  if (!(stt > 0.0)) throw ContractError("decay_fit: window has no time extent");
  const double slope = sty / stt;
  DecayFit fit;
  fit.t_start = window.first;
  fit.t_end = window.second;
  fit.rate = -slope;
  fit.log_intercept = ym - slope * tm;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double e = ys[i] - (fit.log_intercept + slope * ts[i]);
    ss_res += e * e;
  }
  fit.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  fit.cbar0_check = cbar;
  fit.points = ts.size();
  return fit;
}

SigmaDecayResult sigma_decay_check(const Trajectory& trajectory, std::span<const double> t_grid, double c0) {
  const auto& frames = trajectory.frames;
  if (frames.size() < 2) throw ContractError("sigma_decay_check: need at least 2 frames");
  if (!(c0 > 0.0)) throw std::invalid_argument("sigma_decay_check: c0 must be positive");
  const double e0 = potential_energy(frames.front().state, trajectory.gravity) - equilibrium_energy();
  const double e_end = potential_energy(frames.back().state, trajectory.gravity) - equilibrium_energy();
  if (!(e_end < 1e-3 * e0)) {
    std::ostringstream msg;
    msg << "sigma_decay_check: horizon too short, E_rel(T) = " << e_end << " is not below 1e-3 * E_rel(0) = "
        << 1e-3 * e0;
    throw ContractError(msg.str());
  }
  // Spatial integrand per frame, midpoint rule with s^{-1} at cell centres.
  std::vector<double> dev(frames.size());
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const Grid& grid = frames[k].tension.grid;
    const ScalarField& sig = frames[k].tension.values;
    double acc = 0.0;
    for (std::size_t i = 0; i < grid.n_cells(); ++i) {
      const double s = grid.midpoint(i);
      const double d = 0.5 * (sig[i] + sig[i + 1]) - s;
      acc += grid.h() * d * d / s;
    }
    dev[k] = acc;
  }
  // Right-endpoint rule: interval (t_k, t_{k+1}] carries the value at t_{k+1}.
  SigmaDecayResult out;
  out.c0 = c0;
  const double prefactor = std::pow(4.0 * c0, -1.5) * std::sqrt(std::max(e0, 0.0));
  for (double t : t_grid) {
    double tail = 0.0;
    for (std::size_t k = 0; k + 1 < frames.size(); ++k) {
      const double a = std::max(frames[k].state.time, t);
      const double b = frames[k + 1].state.time;
      if (b > a) tail += (b - a) * dev[k + 1];
    }
    const double bound = prefactor * std::exp(-0.5 * c0 * t);
    out.t.push_back(t);
    out.tail.push_back(tail);
    out.bound.push_back(bound);
    if (tail > bound) ++out.violations;
  }
  return out;
}

Compatibility compatibility_predicate(const ArcState& state, const GravitySpec& gravity) {
  const double c = std::abs(boundary_cos_alpha(state, gravity));
  const double lhs = c * boundary_curvature(state);
  const double rhs = 1.0 - c;
  return Compatibility{lhs < rhs - 1e-12, lhs, rhs};
}

}  // namespace whipflow
