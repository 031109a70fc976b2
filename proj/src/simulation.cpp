#include "whipflow/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "whipflow/errors.hpp"

namespace whipflow {

using nlohmann::json;

json SimulationConfig::to_json() const {
  return json{{"scenario", to_string(scenario.kind)},
              {"alpha", scenario.alpha},
              {"eps_geom", scenario.eps_geom},
              {"alpha0", scenario.alpha0},
              {"seed", scenario.seed},
              {"mollify", mollify},
              {"mollify_radius", scenario.mollify_radius},
              {"taper_width", scenario.taper_width},
              {"slope_cap", scenario.slope_cap},
              {"dim", dim},
              {"eps", eps},
              {"cells", n_cells},
              {"T", horizon},
              {"dt_init", stepper.dt_init},
              {"dt_min", stepper.dt_min},
              {"dt_max", stepper.dt_max},
              {"tol", stepper.newton_tol},
              {"newton_max_iter", stepper.newton_max_iter},
              {"scheme", "implicit_euler"},
              {"snapshots", snapshot_times}};
}

SimulationConfig SimulationConfig::from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("simulation config must be a JSON object");
  SimulationConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "scenario") c.scenario.kind = scenario_kind_from_string(v.get<std::string>());
    else if (key == "alpha") c.scenario.alpha = v.get<double>();
    else if (key == "eps_geom") c.scenario.eps_geom = v.get<double>();
    else if (key == "alpha0") c.scenario.alpha0 = v.get<double>();
    else if (key == "seed") c.scenario.seed = v.get<std::uint64_t>();
    else if (key == "mollify") c.mollify = v.get<bool>();
    else if (key == "mollify_radius") c.scenario.mollify_radius = v.get<double>();
    else if (key == "taper_width") c.scenario.taper_width = v.get<double>();
    else if (key == "slope_cap") c.scenario.slope_cap = v.get<double>();
    else if (key == "dim") c.dim = v.get<int>();
    else if (key == "eps") c.eps = v.get<double>();
    else if (key == "cells") c.n_cells = v.get<std::size_t>();
    else if (key == "T") c.horizon = v.get<double>();
    else if (key == "dt_init") c.stepper.dt_init = v.get<double>();
    else if (key == "dt_min") c.stepper.dt_min = v.get<double>();
    else if (key == "dt_max") c.stepper.dt_max = v.get<double>();
    else if (key == "tol") c.stepper.newton_tol = v.get<double>();
    else if (key == "newton_max_iter") c.stepper.newton_max_iter = v.get<int>();
    else if (key == "scheme") {
      if (v.get<std::string>() != "implicit_euler") throw std::invalid_argument("unknown scheme");
    } else if (key == "snapshots") c.snapshot_times = v.get<std::vector<double>>();
    else throw std::invalid_argument("unknown config key '" + key + "'");
  }
  return c;
}

double sup_tangent_norm(const ArcState& state) {
  double sup = 0.0;
  for (const Vec& u : state.tangents()) sup = std::max(sup, u.norm());
  return sup;
}

namespace {

double step_dissipation(const ArcState& a, const ArcState& b) {
  const double dt = b.time - a.time;
  const std::size_t n = a.grid.n_cells();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = (i == 0 ? 0.5 : 1.0) * a.grid.h();
    acc += w * (b.positions[i] - a.positions[i]).squaredNorm();
  }
  return acc / dt;
}

}  // namespace

SimulationResult simulate(const SimulationConfig& cfg) {
  cfg.stepper.validate();
  const Grid grid(cfg.n_cells);
  const GravitySpec gravity = GravitySpec::down(cfg.dim);
  const RegularizedMap map(RegParams{cfg.eps}, cfg.dim);
  ArcState init = build(cfg.scenario, grid, gravity);
  if (cfg.mollify) init = mollify(init, cfg.scenario);

  SimulationResult res{RunRecord{}, init, init, {}, 0.0, 0.0, sup_tangent_norm(init), false};
  res.record.config = cfg.to_json();

  // Snapshot requests are served by the nearest accepted state.
  std::vector<std::optional<ArcState>> nearest(cfg.snapshot_times.size());
  auto offer = [&](const ArcState& s) {
    for (std::size_t k = 0; k < nearest.size(); ++k) {
      const double req = cfg.snapshot_times[k];
      if (!nearest[k] || std::abs(s.time - req) < std::abs(nearest[k]->time - req)) nearest[k] = s;
    }
  };

  auto add_row = [&](const ArcState& s, double dt, int iters) {
    EnergyReport r = report(s, map, gravity);
    res.reports.push_back(r);
    res.record.rows.push_back(SeriesRow{r, dt, iters});
  };
  add_row(init, 0.0, 0);
  offer(init);

  ArcState prev = init;
  double prev_energy = res.reports.back().E_eps;
  EvolveStats stats;
  try {
    res.final_state = evolve(init, cfg.horizon, map, gravity, cfg.stepper,
                             [&](const ArcState& s, const AcceptedStepInfo& info) {
                               add_row(s, info.dt, info.newton_iters);
                               const double e = res.reports.back().E_eps;
                               res.max_energy_increase = std::max(res.max_energy_increase, e - prev_energy);
                               prev_energy = e;
                               res.dissipation += step_dissipation(prev, s);
                               res.sup_tangent = std::max(res.sup_tangent, sup_tangent_norm(s));
                               offer(s);
                               prev = s;
                             },
                             &stats);
  } catch (const SolverFailure& e) {
    res.failed = true;
    res.record.stats.failed = true;
    res.record.stats.failure_message = e.what();
    res.final_state = prev;
  }
  res.record.stats.accepted = stats.accepted;
  res.record.stats.rejected = stats.rejected;
  res.record.stats.dt_history = stats.dt_history;
  res.record.stats.newton_history = stats.newton_history;

  std::vector<double> seen;
  for (const auto& snap : nearest) {
    if (!snap || std::find(seen.begin(), seen.end(), snap->time) != seen.end()) continue;
    seen.push_back(snap->time);
    res.record.snapshots.push_back(Snapshot{*snap, flux_tension(*snap, map)});
  }
  std::sort(res.record.snapshots.begin(), res.record.snapshots.end(),
            [](const Snapshot& a, const Snapshot& b) { return a.state.time < b.state.time; });

  json summary{{"E_rel_initial", res.reports.front().E_rel},
               {"E_rel_final", res.reports.back().E_rel},
               {"E_eps_initial", res.reports.front().E_eps},
               {"E_eps_final", res.reports.back().E_eps},
               {"final_time", res.final_state.time},
               {"dissipation_integral", res.dissipation},
               {"max_energy_increase", res.max_energy_increase},
               {"sup_tangent", res.sup_tangent},
               {"constraint_L1_time_avg", time_averaged_constraint(res.reports)},
               {"decay_rate_reference", kDecayRateReference},
               {"failed", res.failed}};
  {
    ScenarioSpec down;
    const ArcState eq = build(down, grid, gravity);
    summary["l2_distance_to_equilibrium"] = l2_distance(res.final_state, eq);
  }
  const auto window = energy_window(res.reports, 1e-4, 0.5);
  if (window) {
    try {
      const DecayFit fit = decay_fit(res.reports, *window);
      summary["decay_fit"] = {{"t_start", fit.t_start}, {"t_end", fit.t_end},       {"rate", fit.rate},
                              {"r_squared", fit.r_squared}, {"cbar0_check", fit.cbar0_check},
                              {"points", fit.points}};
    } catch (const ContractError& e) {
      summary["decay_fit"] = {{"refused", e.what()}};
    }
  } else {
    summary["decay_fit"] = {{"refused", "E_rel never enters [1e-4, 0.5] * E_rel(0)"}};
  }
  res.record.summary = std::move(summary);
  return res;
}

double time_averaged_constraint(const std::vector<EnergyReport>& reports) {
  if (reports.size() < 2) return reports.empty() ? 0.0 : reports.front().constraint_L1;
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < reports.size(); ++k) {
    acc += 0.5 * (reports[k + 1].t - reports[k].t) * (reports[k].constraint_L1 + reports[k + 1].constraint_L1);
  }
  const double span = reports.back().t - reports.front().t;
  return span > 0.0 ? acc / span : reports.front().constraint_L1;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope: need >= 2 pairs");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("loglog_slope: x values must differ");
  return sxy / sxx;
}

}  // namespace whipflow
