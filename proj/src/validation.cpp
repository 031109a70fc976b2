#include "whipflow/validation.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "whipflow/diagnostics.hpp"
#include "whipflow/flow_solver.hpp"
#include "whipflow/run_io.hpp"
#include "whipflow/scenarios.hpp"
#include "whipflow/simulation.hpp"

namespace whipflow {

namespace {

std::string num(double x) {
  std::ostringstream os;
  os.precision(3);
  os << x;
  return os.str();
}

Vec random_vec(std::mt19937_64& rng, int d, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Vec v(d);
  for (int k = 0; k < d; ++k) v[k] = u(rng);
  return v;
}

CheckResult grid_telescoping() {
  const Grid grid(37);
  std::mt19937_64 rng(1);
  VecField v(grid.n_nodes());
  for (Vec& x : v) x = random_vec(rng, 3, 1.0);
  const VecField d = diff_forward(grid, v);
  Vec sum = Vec::Zero(3);
  for (const Vec& x : d) sum += grid.h() * x;
  const double err = (sum - (v.back() - v.front())).cwiseAbs().maxCoeff();
  return {"grid: summed differences telescope", err <= 1e-13, "err=" + num(err)};
}

CheckResult grid_quadrature_order() {
  auto err = [](std::size_t n) {
    const Grid g(n);
    ScalarField f(g.n_nodes());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::exp(g.node(i));
    return std::abs(quad_trapezoid(g, f) - (std::exp(1.0) - 1.0));
  };
  const double ratio = err(20) / err(40);
  return {"grid: trapezoid rule is second order", std::abs(ratio - 4.0) <= 0.6, "ratio=" + num(ratio)};
}

CheckResult map_round_trip() {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> le(std::log(1e-4), 0.0);
  double worst = 0.0;
  for (int k = 0; k < 300; ++k) {
    const double eps = std::exp(le(rng));
    const int d = 2 + k % 2;
    const RegularizedMap map(RegParams{eps}, d);
    const Vec tau = random_vec(rng, d, 6.0);
    worst = std::max(worst, (map.apply_F(map.apply_G(tau)) - tau).norm() / (1.0 + tau.norm()));
  }
  return {"regularized_map: F(G(tau)) = tau", worst <= 1e-10, "worst=" + num(worst)};
}

CheckResult map_spectral_sandwich() {
  std::mt19937_64 rng(3);
  bool ok = true;
  for (int k = 0; k < 100; ++k) {
    const RegularizedMap map(RegParams{0.1 * (k % 5 + 1) / 5.0}, 3);
    const Vec tau = random_vec(rng, 3, 3.0);
    const SpectralBounds b = map.spectral_bounds(tau);
    const Eigen::SelfAdjointEigenSolver<Mat> es(map.jacobian_G(tau));
    for (int i = 0; i < 3; ++i) {
      const double ev = es.eigenvalues()[i];
      ok = ok && ev >= b.lambda * (1 - 1e-9) && ev <= b.Lambda * (1 + 1e-9);
    }
  }
  return {"regularized_map: Jacobian eigenvalues in [lambda, Lambda]", ok, ""};
}

CheckResult map_positivity() {
  std::mt19937_64 rng(4);
  double worst = 0.0;
  const RegularizedMap map(RegParams{1e-3}, 2);
  for (int k = 0; k < 200; ++k) {
    const Vec tau = random_vec(rng, 2, 2.0);
    worst = std::min(worst, map.apply_G(tau).dot(tau));
  }
  return {"regularized_map: G(tau).tau >= 0", worst >= 0.0, "min=" + num(worst)};
}

CheckResult solver_energy_and_pin() {
  SimulationConfig cfg;
  cfg.scenario.kind = ScenarioKind::quarter_circle;
  cfg.n_cells = 100;
  cfg.horizon = 0.5;
  const SimulationResult r = simulate(cfg);
  bool pinned = true;
  for (const Snapshot& s : r.record.snapshots) pinned = pinned && s.state.positions.back().isZero(0.0);
  pinned = pinned && r.final_state.positions.back().isZero(0.0);
  const double budget = r.reports.front().E_eps - r.reports.back().E_eps - r.dissipation;
  const bool ok = !r.failed && pinned && r.max_energy_increase <= 1e-9 && budget >= -1e-9;
  return {"flow_solver: energy decreases, dissipation within budget, pin exact", ok,
          "max_increase=" + num(r.max_energy_increase) + " budget_slack=" + num(budget)};
}

CheckResult solver_rotation() {
  const Grid grid(100);
  const GravitySpec g = GravitySpec::down(2);
  const double th = 0.7;
  Mat rot(2, 2);
  rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  const GravitySpec gr{Vec(rot * g.g())};
  ScenarioSpec spec;
  spec.kind = ScenarioKind::quarter_circle;
  const ArcState a = mollify(build(spec, grid, g), spec);
  VecField rp;
  for (const Vec& p : a.positions) rp.push_back(rot * p);
  const ArcState b(grid, rp, 0.0);
  const RegularizedMap map(RegParams{1e-2}, 2);
  StepperConfig cfg;
  const ArcState fa = evolve(a, 0.2, map, g, cfg);
  const ArcState fb = evolve(b, 0.2, map, gr, cfg);
  double err = 0.0;
  for (std::size_t i = 0; i < fa.positions.size(); ++i) {
    err = std::max(err, (rot * fa.positions[i] - fb.positions[i]).norm());
  }
  return {"flow_solver: rotating g and data rotates the solution", err <= 1e-8, "err=" + num(err)};
}

CheckResult tension_max_principle() {
  const Grid grid(200);
  const GravitySpec g = GravitySpec::down(2);
  bool ok = true;
  double worst = 0.0;
  for (double alpha : {0.3, 1.2, 2.0, 2.9}) {
    ScenarioSpec spec;
    spec.kind = ScenarioKind::random_lipschitz;
    spec.seed = static_cast<std::uint64_t>(alpha * 100);
    const ArcState s = mollify(build(spec, grid, g), spec);
    const TensionProfile t = tension_for_state(s, g);
    const double c = boundary_cos_alpha(s, g);
    for (std::size_t i = 0; i < grid.n_nodes(); ++i) {
      worst = std::max(worst, std::abs(t.values[i]) - grid.node(i) * std::abs(c));
      if (c > 0) ok = ok && t.values[i] >= -1e-12;
      if (c < 0) ok = ok && t.values[i] <= 1e-12;
    }
  }
  ok = ok && worst <= 1e-10;
  return {"tension_bvp: sign follows cos alpha and |sigma| <= s |cos alpha|", ok, "excess=" + num(worst)};
}

CheckResult diagnostics_equilibria() {
  const Grid grid(100);
  const GravitySpec g = GravitySpec::down(3);
  const RegularizedMap map(RegParams{1e-2}, 3);
  ScenarioSpec down, up;
  up.kind = ScenarioKind::vertical_up;
  const EnergyReport a = report(build(down, grid, g), map, g);
  const EnergyReport b = report(build(up, grid, g), map, g);
  const bool ok = std::abs(a.E + 0.5) <= 1e-12 && std::abs(a.D) <= 1e-10 && std::abs(b.E - 0.5) <= 1e-12 &&
                  std::abs(b.D) <= 1e-10 && std::abs(a.E - a.E_alt) <= 10 * grid.h();
  return {"diagnostics: equilibria have E = -+1/2 and D = 0", ok, "D=" + num(a.D) + "," + num(b.D)};
}

CheckResult diagnostics_identity() {
  const Grid grid(150);
  const GravitySpec g = GravitySpec::down(2);
  ScenarioSpec spec;
  spec.kind = ScenarioKind::random_lipschitz;
  spec.seed = 11;
  const EnergyIdentity id = relative_energy_identity_check(build(spec, grid, g), g);
  return {"diagnostics: relative-energy identity", id.gap <= 10 * grid.h() * grid.h(), "gap=" + num(id.gap)};
}

CheckResult scenarios_slope_and_pin() {
  const Grid grid(128);
  const GravitySpec g = GravitySpec::down(3);
  bool ok = true;
  for (ScenarioKind k : {ScenarioKind::vertical_down, ScenarioKind::vertical_up, ScenarioKind::straight_angle,
                         ScenarioKind::quarter_circle, ScenarioKind::helix, ScenarioKind::random_lipschitz}) {
    ScenarioSpec spec;
    spec.kind = k;
    spec.alpha = 0.8;
    const ArcState s = build(spec, grid, g);
    ok = ok && sup_tangent_norm(s) <= 1.0 + 1e-12 && s.positions.back().isZero(0.0);
    const ArcState m = mollify(s, spec);
    ok = ok && sup_tangent_norm(m) <= 1.0 + 1e-12 && m.positions.back().isZero(0.0);
  }
  ScenarioSpec r;
  r.kind = ScenarioKind::random_lipschitz;
  r.seed = 99;
  ok = ok && same_state(build(r, grid, g), build(r, grid, g));
  return {"scenarios: |u| <= 1, exact pin, seeded determinism", ok, ""};
}

CheckResult run_io_round_trip() {
  SimulationConfig cfg;
  cfg.n_cells = 20;
  cfg.scenario.mollify_radius = 0.1;
  cfg.scenario.taper_width = 0.1;
  cfg.horizon = 0.05;
  cfg.snapshot_times = {0.0, 0.05};
  const SimulationResult r = simulate(cfg);
  const auto dir = std::filesystem::temp_directory_path() /
                   ("whipflow_validate_" + std::to_string(std::random_device{}()));
  write_run(r.record, dir);
  const bool ok = same_record(read_run(dir), r.record);
  std::filesystem::remove_all(dir);
  return {"run_io: write/read round trip is exact", ok, ""};
}

}  // namespace

std::vector<CheckResult> run_invariant_suite() {
  const std::vector<std::pair<const char*, std::function<CheckResult()>>> checks = {
      {"grid telescoping", grid_telescoping},
      {"grid quadrature order", grid_quadrature_order},
      {"map round trip", map_round_trip},
      {"map spectral sandwich", map_spectral_sandwich},
      {"map positivity", map_positivity},
      {"solver energy and pin", solver_energy_and_pin},
      {"solver rotation", solver_rotation},
      {"tension maximum principle", tension_max_principle},
      {"diagnostics equilibria", diagnostics_equilibria},
      {"diagnostics identity", diagnostics_identity},
      {"scenario invariants", scenarios_slope_and_pin},
      {"run_io round trip", run_io_round_trip}};
  std::vector<CheckResult> out;
  for (const auto& [name, check] : checks) {
    try {
      out.push_back(check());
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("threw: ") + e.what()});
    }
  }
  return out;
}

}  // namespace whipflow
