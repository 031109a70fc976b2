#include "whipflow/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

#include "whipflow/errors.hpp"
#include "whipflow/run_io.hpp"
#include "whipflow/simulation.hpp"
#include "whipflow/validation.hpp"

namespace whipflow {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (end == item.c_str() || *end != '\0' || !std::isfinite(v)) {
      throw UsageError(std::string("--") + what + ": invalid number '" + item + "'");
    }
    out.push_back(v);
  }
  return out;
}

// Raw flag values; an option counts as given only if it appeared on the command line.
struct Flags {
  std::string scenario, eps, snapshots, out, config;
  std::size_t cells = 0;
  double T = 0, dt_init = 0, dt_min = 0, dt_max = 0, tol = 0, alpha0 = 0, alpha = 0;
  std::uint64_t seed = 0;
  int dim = 2;
  bool no_mollify = false;
  std::map<std::string, CLI::Option*> opts;

  bool given(const std::string& name) const {
    auto it = opts.find(name);
    return it != opts.end() && it->second->count() > 0;
  }
};

void add_common(CLI::App* cmd, Flags& f) {
  f.opts["scenario"] = cmd->add_option("--scenario", f.scenario, "vertical_down | vertical_up | straight_angle | "
                                                                  "quarter_circle | helix | random_lipschitz");
  f.opts["eps"] = cmd->add_option("--eps", f.eps, "regularization parameter (comma list for sweeps)");
  f.opts["cells"] = cmd->add_option("--cells", f.cells, "number of grid cells")->check(CLI::PositiveNumber);
  f.opts["T"] = cmd->add_option("--T", f.T, "time horizon")->check(CLI::NonNegativeNumber);
  f.opts["dt_init"] = cmd->add_option("--dt-init", f.dt_init, "initial time step")->check(CLI::PositiveNumber);
  f.opts["dt_min"] = cmd->add_option("--dt-min", f.dt_min, "smallest time step")->check(CLI::PositiveNumber);
  f.opts["dt_max"] = cmd->add_option("--dt-max", f.dt_max, "largest time step")->check(CLI::PositiveNumber);
  f.opts["tol"] = cmd->add_option("--tol", f.tol, "Newton residual tolerance")->check(CLI::PositiveNumber);
  f.opts["out"] = cmd->add_option("--out", f.out, "output directory");
  f.opts["snapshots"] = cmd->add_option("--snapshots", f.snapshots, "comma list of snapshot times");
  f.opts["seed"] = cmd->add_option("--seed", f.seed, "seed for random_lipschitz");
  f.opts["config"] = cmd->add_option("--config", f.config, "JSON config file (flags override it)");
  f.opts["alpha0"] = cmd->add_option("--alpha0", f.alpha0, "helix / counterexample angle");
  f.opts["alpha"] = cmd->add_option("--alpha", f.alpha, "straight_angle angle to gravity");
  f.opts["dim"] = cmd->add_option("--dim", f.dim, "ambient dimension")->check(CLI::IsMember({2, 3}));
  f.opts["no_mollify"] = cmd->add_flag("--no-mollify", f.no_mollify, "skip mollification of initial data");
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError("config file '" + path + "': " + e.what());
  }
  // Accept the echoed config.json of a previous run as well.
  if (j.is_object() && j.contains("schema_version") && j.contains("config")) j = j.at("config");
  if (!j.is_object()) throw UsageError("config file '" + path + "' must hold a JSON object");
  return j;
}

// Defaults <- config file <- flags. "eps" stays a list so sweeps can use it.
struct Resolved {
  json sim;  // SimulationConfig keys
  std::vector<double> eps_list;
  std::string out;
};

Resolved resolve(const Flags& f, const std::string& command, json defaults) {
  json file = f.given("config") ? load_config_file(f.config) : json::object();
  Resolved r;
  if (file.contains("out")) {
    r.out = file.at("out").get<std::string>();
    file.erase("out");
  }
  if (file.contains("eps")) {
    const json& e = file.at("eps");
    r.eps_list = e.is_array() ? e.get<std::vector<double>>() : std::vector<double>{e.get<double>()};
    file.erase("eps");
  }
  for (auto& [k, v] : file.items()) defaults[k] = v;

  if (f.given("scenario")) defaults["scenario"] = f.scenario;
  if (f.given("cells")) defaults["cells"] = f.cells;
  if (f.given("T")) defaults["T"] = f.T;
  if (f.given("dt_init")) defaults["dt_init"] = f.dt_init;
  if (f.given("dt_min")) defaults["dt_min"] = f.dt_min;
  if (f.given("dt_max")) defaults["dt_max"] = f.dt_max;
  if (f.given("tol")) defaults["tol"] = f.tol;
  if (f.given("seed")) defaults["seed"] = f.seed;
  if (f.given("alpha0")) defaults["alpha0"] = f.alpha0;
  if (f.given("alpha")) defaults["alpha"] = f.alpha;
  if (f.given("dim")) defaults["dim"] = f.dim;
  if (f.given("no_mollify")) defaults["mollify"] = false;
  if (f.given("snapshots")) defaults["snapshots"] = parse_list(f.snapshots, "snapshots");
  if (f.given("eps")) r.eps_list = parse_list(f.eps, "eps");
  if (f.given("out")) r.out = f.out;

  if (r.out.empty()) {
    const char* root = std::getenv("WHIPFLOW_OUT");
    r.out = (fs::path(root && *root ? root : "whipflow_out") / command).string();
  }
  if (r.eps_list.empty()) r.eps_list = {defaults.value("eps", 1e-2)};
  // Keep the dt bounds consistent when only some of them were given.
  if (defaults.contains("dt_init") && defaults.contains("dt_max") &&
      defaults["dt_init"].get<double>() > defaults["dt_max"].get<double>() && !f.given("dt_init")) {
    defaults["dt_init"] = defaults["dt_max"];
  }
  defaults["eps"] = r.eps_list.front();
  r.sim = defaults;
  return r;
}

SimulationConfig make_sim(const json& j) {
  try {
    SimulationConfig c = SimulationConfig::from_json(j);
    c.stepper.validate();
    RegParams{c.eps}.validate();
    if (c.n_cells < 3) throw std::invalid_argument("--cells must be at least 3");
    if (!(c.horizon >= 0.0)) throw std::invalid_argument("--T must be nonnegative");
    return c;
  } catch (const json::exception& e) {
    throw UsageError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

void print_summary_line(const SimulationResult& r, std::ostream& os) {
  const json& s = r.record.summary;
  os << "E_rel(0)=" << format_double(s["E_rel_initial"]) << " E_rel(T)=" << format_double(s["E_rel_final"]);
  if (s["decay_fit"].contains("rate")) {
    os << " decay_rate=" << format_double(s["decay_fit"]["rate"]) << " r2=" << format_double(s["decay_fit"]["r_squared"]);
  }
  os << " accepted=" << r.record.stats.accepted << " rejected=" << r.record.stats.rejected << '\n';
}

int cmd_simulate(const Flags& f) {
  const Resolved r = resolve(f, "simulate", SimulationConfig{}.to_json());
  if (!f.given("scenario") && !(f.given("config") && load_config_file(f.config).contains("scenario"))) {
    throw UsageError("simulate: --scenario is required");
  }
  if (r.eps_list.size() != 1) throw UsageError("simulate: --eps takes a single value (use sweep-eps)");
  const SimulationConfig cfg = make_sim(r.sim);
  const SimulationResult res = simulate(cfg);
  write_run(res.record, r.out);
  std::cout << "simulate: wrote " << r.out << '\n';
  print_summary_line(res, std::cout);
  if (res.failed) {
    std::cerr << "simulate: solver failure: " << res.record.stats.failure_message << '\n';
    return kExitNumeric;
  }
  return kExitOk;
}

int cmd_sweep_eps(const Flags& f) {
  json defaults = SimulationConfig{}.to_json();
  defaults["scenario"] = "quarter_circle";
  defaults["cells"] = 400;
  defaults["T"] = 8.0;
  const Resolved r = resolve(f, "sweep-eps", defaults);
  if (r.eps_list.size() < 2) throw UsageError("sweep-eps: need at least two --eps values");
  std::vector<SimulationConfig> cfgs;
  for (double e : r.eps_list) {
    json j = r.sim;
    j["eps"] = e;
    cfgs.push_back(make_sim(j));
  }
  std::vector<std::future<SimulationResult>> jobs;
  for (const SimulationConfig& c : cfgs) jobs.push_back(std::async(std::launch::async, [c] { return simulate(c); }));

  json runs = json::array();
  std::vector<double> xs, ys;
  bool any_failed = false;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    const SimulationResult res = jobs[k].get();
    const std::string name = "run" + std::to_string(k) + "_eps" + format_double(cfgs[k].eps);
    write_run(res.record, fs::path(r.out) / name);
    const double avg = time_averaged_constraint(res.reports);
    runs.push_back({{"eps", cfgs[k].eps}, {"dir", name}, {"constraint_L1_time_avg", avg}, {"failed", res.failed}});
    any_failed = any_failed || res.failed;
    xs.push_back(cfgs[k].eps);
    ys.push_back(avg);
    std::cout << "eps=" << format_double(cfgs[k].eps) << " constraint_L1_time_avg=" << format_double(avg)
              << (res.failed ? " FAILED" : "") << '\n';
  }
  json summary{{"schema_version", kSchemaVersion}, {"config", r.sim}, {"runs", runs}};
  bool distinct = true;
  for (std::size_t i = 1; i < xs.size(); ++i) distinct = distinct && xs[i] != xs[0];
  if (distinct) {
    const double slope = loglog_slope(xs, ys);
    summary["loglog_slope"] = slope;
    std::cout << "loglog_slope=" << format_double(slope) << '\n';
  } else {
    summary["loglog_slope"] = nullptr;
  }
  {
    std::ofstream out(fs::path(r.out) / "sweep_summary.json");
    if (!out) throw IoError("cannot write " + (fs::path(r.out) / "sweep_summary.json").string());
    out << summary.dump(2) << '\n';
  }
  return any_failed ? kExitNumeric : kExitOk;
}

int cmd_tension(const Flags& f) {
  json defaults = SimulationConfig{}.to_json();
  defaults["mollify"] = false;
  const Resolved r = resolve(f, "tension", defaults);
  const SimulationConfig cfg = make_sim(r.sim);
  const Grid grid(cfg.n_cells);
  const GravitySpec g = GravitySpec::down(cfg.dim);
  ArcState state = build(cfg.scenario, grid, g);
  if (cfg.mollify) state = mollify(state, cfg.scenario);
  const TensionProfile sigma = tension_for_state(state, g);
  const Compatibility comp = compatibility_predicate(state, g);
  fs::create_directories(r.out);
  {
    std::ofstream out(fs::path(r.out) / "tension.csv");
    if (!out) throw IoError("cannot write " + (fs::path(r.out) / "tension.csv").string());
    out << "s,sigma\n";
    for (std::size_t i = 0; i < grid.n_nodes(); ++i) {
      out << format_double(grid.node(i)) << ',' << format_double(sigma.values[i]) << '\n';
    }
  }
  const double cos_a = boundary_cos_alpha(state, g);
  json doc{{"schema_version", kSchemaVersion},
           {"config", r.sim},
           {"cos_alpha", cos_a},
           {"sigma_at_1", sigma.at_end()},
           {"D", 1.0 - sigma.at_end() * cos_a},
           {"compatibility", {{"holds", comp.holds}, {"lhs", comp.lhs}, {"rhs", comp.rhs}}}};
  std::ofstream(fs::path(r.out) / "tension.json") << doc.dump(2) << '\n';
  std::cout << "tension: sigma(1)=" << format_double(sigma.at_end()) << " cos_alpha=" << format_double(cos_a)
            << " wrote " << r.out << '\n';
  return kExitOk;
}

int cmd_counterexample(const Flags& f) {
  json defaults{{"alpha0", 1.5707963267948966}, {"cells", 2000}};
  Resolved r = resolve(f, "counterexample", defaults);
  if (!f.given("eps")) r.eps_list = {0.1, 0.05, 0.025};
  const double alpha0 = r.sim.at("alpha0").get<double>();
  const std::size_t cells = r.sim.at("cells").get<std::size_t>();
  if (!(alpha0 > 0.0 && alpha0 < std::numbers::pi)) throw UsageError("--alpha0 must lie in (0, pi)");
  fs::create_directories(r.out);
  std::ofstream out(fs::path(r.out) / "counterexample.csv");
  if (!out) throw IoError("cannot write " + (fs::path(r.out) / "counterexample.csv").string());
  out << "eps,varsigma_at_1,bound,ratio\n";
  std::cout << "eps,varsigma_at_1,bound,ratio\n";
  for (double e : r.eps_list) {
    if (!(e > 0.0)) throw UsageError("--eps values must be positive");
    const CounterexampleResult c = counterexample_tension(e, alpha0, cells);
    const std::string line = format_double(e) + ',' + format_double(c.varsigma_at_1) + ',' + format_double(c.bound) +
                             ',' + format_double(c.ratio);
    out << line << '\n';
    std::cout << line << '\n';
  }
  return kExitOk;
}

RunRecord trajectory_record(const Trajectory& traj, const RegularizedMap& map, const json& config,
                            const std::vector<double>& snapshot_times) {
  RunRecord rec;
  rec.config = config;
  double prev_t = traj.frames.front().state.time;
  for (const Frame& fr : traj.frames) {
    rec.rows.push_back(SeriesRow{report(fr.state, map, traj.gravity), fr.state.time - prev_t, 0});
    prev_t = fr.state.time;
  }
  std::vector<std::size_t> picked;
  for (double t : snapshot_times) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < traj.frames.size(); ++k) {
      if (std::abs(traj.frames[k].state.time - t) < std::abs(traj.frames[best].state.time - t)) best = k;
    }
    if (std::find(picked.begin(), picked.end(), best) == picked.end()) picked.push_back(best);
  }
  std::sort(picked.begin(), picked.end());
  for (std::size_t k : picked) rec.snapshots.push_back(Snapshot{traj.frames[k].state, traj.frames[k].tension});
  return rec;
}

json residual_json(const GeneralizedResidual& r) {
  return {{"pde_residual_L2", r.pde_residual_L2},
          {"constraint_product_L2", r.constraint_product_L2},
          {"stretch_violation", r.stretch_violation},
          {"diss_inequality_slack", r.diss_inequality_slack}};
}

int cmd_nonuniqueness(const Flags& f) {
  json defaults = SimulationConfig{}.to_json();
  defaults["T"] = 5.0;
  const Resolved r = resolve(f, "nonuniqueness", defaults);
  SimulationConfig cfg = make_sim(r.sim);
  if (!(cfg.horizon > 0.0)) throw UsageError("nonuniqueness: --T must be positive");
  std::vector<double> snaps = cfg.snapshot_times;
  if (snaps.empty()) snaps = {0.0, 0.5 * cfg.horizon, cfg.horizon};
  const RegularizedMap map(RegParams{cfg.eps}, cfg.dim);
  const GravitySpec g = GravitySpec::down(cfg.dim);
  const BranchingResult b = branching_pair(cfg.horizon, map, Grid(cfg.n_cells), g, cfg.stepper, cfg.scenario, 0.0);
  write_run(trajectory_record(b.forward, map, r.sim, snaps), fs::path(r.out) / "forward");
  write_run(trajectory_record(b.stationary, map, r.sim, snaps), fs::path(r.out) / "stationary");
  json doc{{"schema_version", kSchemaVersion},
           {"config", r.sim},
           {"separation", b.separation},
           {"equilibrium_distance", 2.0 / std::sqrt(3.0)},
           {"forward_residual", residual_json(b.forward_residual)},
           {"stationary_residual", residual_json(b.stationary_residual)}};
  std::ofstream(fs::path(r.out) / "nonuniqueness.json") << doc.dump(2) << '\n';
  std::cout << "nonuniqueness: separation=" << format_double(b.separation) << " at T=" << format_double(cfg.horizon)
            << " wrote " << r.out << '\n';
  return kExitOk;
}

int cmd_validate() {
  const auto results = run_invariant_suite();
  bool ok = true;
  for (const CheckResult& c : results) {
    std::cout << (c.passed ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) std::cout << "  (" << c.detail << ")";
    std::cout << '\n';
    ok = ok && c.passed;
  }
  std::cout << (ok ? "all invariants hold" : "some invariants FAILED") << '\n';
  return ok ? kExitOk : kExitNumeric;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"whipflow: regularized inextensible-string gradient flow laboratory"};
  app.require_subcommand(1);
  auto* sim = app.add_subcommand("simulate", "evolve one scenario and write a run directory");
  auto* sweep = app.add_subcommand("sweep-eps", "run one scenario at several eps values");
  auto* ten = app.add_subcommand("tension", "solve the tension problem for a scenario state");
  auto* cex = app.add_subcommand("counterexample", "helix tension table over eps");
  auto* nonu = app.add_subcommand("nonuniqueness", "two solutions from the upright state");
  auto* val = app.add_subcommand("validate", "run the invariant suite");
  std::map<CLI::App*, Flags> per;
  for (CLI::App* c : {sim, sweep, ten, cex, nonu}) add_common(c, per[c]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, std::cerr, std::cerr);
    std::cerr << app.help();
    return kExitUsage;
  }

  try {
    if (val->parsed()) return cmd_validate();
    for (auto& [cmd, f] : per) {
      if (!cmd->parsed()) continue;
      if (cmd == sim) return cmd_simulate(f);
      if (cmd == sweep) return cmd_sweep_eps(f);
      if (cmd == ten) return cmd_tension(f);
      if (cmd == cex) return cmd_counterexample(f);
      if (cmd == nonu) return cmd_nonuniqueness(f);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UnderResolvedError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitUsage;
}

}  // namespace whipflow
