#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "whipflow/errors.hpp"
#include "whipflow/flow_solver.hpp"
#include "whipflow/scenarios.hpp"

using namespace whipflow;
using whipflow::testing::hanging;
using whipflow::testing::vec2;

namespace {

ArcState mollified(ScenarioKind kind, const Grid& grid, const GravitySpec& g) {
  ScenarioSpec spec;
  spec.kind = kind;
  return mollify(build(spec, grid, g), spec);
}

// Independent nodal energy: midpoint sum of the closed-form potential plus trapezoid gravity term.
double energy_oracle(const ArcState& s, double eps, const Vec& g) {
  const RegularizedMap map(RegParams{eps}, s.dim());
  const double h = s.grid.h();
  double e = 0.0;
  for (std::size_t i = 0; i + 1 < s.positions.size(); ++i) {
    const Vec u = (s.positions[i + 1] - s.positions[i]) / h;
    const double r = map.apply_G(u).norm();
    e += h * eps * (0.5 * r * r - 1.0 / std::sqrt(eps + r * r));
  }
  for (std::size_t i = 0; i < s.positions.size(); ++i) {
    const double w = (i == 0 || i + 1 == s.positions.size()) ? 0.5 : 1.0;
    e -= w * h * g.dot(s.positions[i]);
  }
  return e;
}

}  // namespace

TEST(StepperConfig, Validation) {
  StepperConfig c;
  EXPECT_NO_THROW(c.validate());
  c.dt_min = 1e-2;
  c.dt_init = 1e-3;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = StepperConfig{};
  c.dt_max = 1e-4;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Residual, HorizontalSegmentInteriorIsMinusG) {
  const Grid grid(8);
  VecField p;
  for (std::size_t i = 0; i < grid.n_nodes(); ++i) p.push_back(vec2(1.0 - grid.node(i), 0.0));
  const ArcState s(grid, p, 0.0);
  const RegularizedMap map(RegParams{1.0}, 2);
  const VecField r = residual(s, s, 1.0, map, GravitySpec::down(2));
  for (std::size_t i = 1; i + 1 < r.size(); ++i) {
    EXPECT_NEAR(r[i][0], 0.0, 1e-14);
    EXPECT_NEAR(r[i][1], 1.0, 1e-14);
  }
  EXPECT_EQ(r.back().norm(), 0.0);
}

TEST(Residual, NeumannEndWithFlatFirstCell) {
  const Grid grid(4);
  VecField p = {vec2(0.5, 0.2), vec2(0.5, 0.2), vec2(0.3, 0.1), vec2(0.1, 0.05), vec2(0, 0)};
  const ArcState s(grid, p, 0.0);
  const RegularizedMap map(RegParams{0.1}, 2);
  const VecField r = residual(s, s, 0.5, map, GravitySpec::down(2));
  // u_{1/2} = 0 so node 0 sees only gravity.
  EXPECT_NEAR(r[0][0], 0.0, 1e-15);
  EXPECT_NEAR(r[0][1], 1.0, 1e-15);
}

TEST(Residual, ShapeMismatch) {
  const Grid a(4), b(5);
  const GravitySpec g = GravitySpec::down(2);
  const RegularizedMap map(RegParams{0.1}, 2);
  EXPECT_THROW(residual(hanging(a, g, 1), hanging(b, g, 1), 0.1, map, g), ShapeError);
}

TEST(DiscreteEnergy, MatchesOracle) {
  const Grid grid(100);
  const GravitySpec g = GravitySpec::down(2);
  for (ScenarioKind k : {ScenarioKind::quarter_circle, ScenarioKind::random_lipschitz}) {
    const ArcState s = mollified(k, grid, g);
    EXPECT_NEAR(discrete_energy(s, RegularizedMap(RegParams{0.05}, 2), g), energy_oracle(s, 0.05, g.g()), 1e-12);
  }
}

TEST(Step, SteadyStateIsFixedPoint) {
  // Converge to the discrete steady state first, then one more step must not move it.
  const Grid grid(100);
  const GravitySpec g = GravitySpec::down(2);
  const RegularizedMap map(RegParams{0.05}, 2);
  StepperConfig cfg;
  cfg.dt_max = 1.0;
  ArcState s = evolve(mollified(ScenarioKind::vertical_down, grid, g), 200.0, map, g, cfg);
  const VecField r0 = residual(s, s, 1.0, map, g);
  double stationary = 0.0;
  for (const Vec& v : r0) stationary = std::max(stationary, v.cwiseAbs().maxCoeff());
  ASSERT_LE(stationary, 1e-8);
  const StepOutcome out = step(s, 0.3, map, g, cfg);
  ASSERT_TRUE(out.state.has_value());
  EXPECT_LE(out.stats.newton_iters, 2);
  for (std::size_t i = 0; i < s.positions.size(); ++i) {
    EXPECT_LE((out.state->positions[i] - s.positions[i]).norm(), 1e-8);
  }
}

TEST(Step, ResidualMeetsToleranceAndPinExact) {
  const Grid grid(100);
  const GravitySpec g = GravitySpec::down(2);
  const RegularizedMap map(RegParams{1e-2}, 2);
  const ArcState s0 = mollified(ScenarioKind::quarter_circle, grid, g);
  StepperConfig cfg;
  const StepOutcome out = step(s0, 1e-3, map, g, cfg);
  ASSERT_TRUE(out.state.has_value());
  EXPECT_TRUE(out.stats.converged);
  EXPECT_DOUBLE_EQ(out.state->time, 1e-3);
  EXPECT_TRUE(out.state->positions.back().isZero(0.0));
  EXPECT_LE(out.stats.residual_inf, cfg.newton_tol * 10.0);
}

TEST(Step, EnergyStrictlyDecreases) {
  const Grid grid(100);
  const GravitySpec g = GravitySpec::down(2);
  const RegularizedMap map(RegParams{1e-2}, 2);
  StepperConfig cfg;
  for (ScenarioKind k : {ScenarioKind::quarter_circle, ScenarioKind::random_lipschitz, ScenarioKind::straight_angle}) {
    ScenarioSpec spec;
    spec.kind = k;
    spec.alpha = 1.0;
    spec.seed = 3;
    const ArcState s0 = mollify(build(spec, grid, g), spec);
    for (double dt : {1e-4, 1e-3, 1e-2}) {
      const StepOutcome out = step(s0, dt, map, g, cfg);
      ASSERT_TRUE(out.state.has_value());
      EXPECT_LT(energy_oracle(*out.state, 1e-2, g.g()), energy_oracle(s0, 1e-2, g.g()));
    }
  }
}

TEST(Evolve, EmptyHorizon) {
  const Grid grid(20);
  const GravitySpec g = GravitySpec::down(2);
  const RegularizedMap map(RegParams{0.1}, 2);
  const ArcState s = hanging(grid, g, -1.0);
  int calls = 0;
  const ArcState out = evolve(s, 0.0, map, g, StepperConfig{}, [&](const ArcState&, const AcceptedStepInfo&) { ++calls; });
  EXPECT_EQ(calls, 0);
  EXPECT_TRUE(same_state(out, s));
}

TEST(Evolve, FinalTimeAndObserverOrder) {
  const Grid grid(100);
  const GravitySpec g = GravitySpec::down(2);
  const RegularizedMap map(RegParams{0.05}, 2);
  StepperConfig cfg;
  double last = 0.0;
  bool ordered = true;
  EvolveStats stats;
  const ArcState out =
      evolve(mollified(ScenarioKind::quarter_circle, grid, g), 0.37, map, g, cfg,
             [&](const ArcState& s, const AcceptedStepInfo& info) {
               ordered = ordered && s.time > last && info.dt >= cfg.dt_min && info.dt <= cfg.dt_max;
               last = s.time;
             },
             &stats);
  EXPECT_TRUE(ordered);
  EXPECT_GE(out.time, 0.37 - cfg.dt_min);
  EXPECT_EQ(stats.accepted, stats.dt_history.size());
  EXPECT_EQ(stats.accepted, stats.newton_history.size());
}

TEST(Evolve, VerticalDownStaysNearEquilibrium) {
  const Grid grid(200);
  const GravitySpec g = GravitySpec::down(2);
  const RegularizedMap map(RegParams{1e-2}, 2);
  const ArcState out = evolve(mollified(ScenarioKind::vertical_down, grid, g), 1.0, map, g, StepperConfig{});
  EXPECT_LE(l2_distance(out, hanging(grid, g, 1.0)), 0.05);
}

TEST(Evolve, MaxPrincipleAndBudget) {
  const Grid grid(200);
  const GravitySpec g = GravitySpec::down(2);
  const double eps = 1e-2;
  const RegularizedMap map(RegParams{eps}, 2);
  const ArcState s0 = mollified(ScenarioKind::quarter_circle, grid, g);
  double sup = 0.0, diss = 0.0, worst_increase = -1.0;
  ArcState prev = s0;
  auto sup_u = [](const ArcState& s) {
    double m = 0.0;
    for (const Vec& u : s.tangents()) m = std::max(m, u.norm());
    return m;
  };
  sup = sup_u(s0);
  const ArcState out = evolve(s0, 2.0, map, g, StepperConfig{}, [&](const ArcState& s, const AcceptedStepInfo& info) {
    sup = std::max(sup, sup_u(s));
    ScalarField v(s.positions.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (s.positions[i] - prev.positions[i]).squaredNorm() / info.dt;
    diss += quad_trapezoid(s.grid, v);
    worst_increase = std::max(worst_increase, energy_oracle(s, eps, g.g()) - energy_oracle(prev, eps, g.g()));
    prev = s;
  });
  EXPECT_LE(sup, 1.0 + std::sqrt(eps) + 0.05);
  EXPECT_LE(worst_increase, 1e-9);
  EXPECT_LE(diss, energy_oracle(s0, eps, g.g()) - energy_oracle(out, eps, g.g()) + 1e-9);
}

TEST(EvolveProperty, GridRefinementOrder) {
  // Fixed dt so only the spatial error changes; coarse nodes are every other fine node.
  StepperConfig cfg;
  cfg.dt_init = cfg.dt_min = cfg.dt_max = 1e-2;
  const GravitySpec g = GravitySpec::down(2);
  const RegularizedMap map(RegParams{0.1}, 2);
  auto run = [&](std::size_t n) {
    const Grid grid(n);
    ScenarioSpec spec;
    spec.kind = ScenarioKind::quarter_circle;
    spec.mollify_radius = spec.taper_width = 0.05;
    return evolve(mollify(build(spec, grid, g), spec), 1.0, map, g, cfg);
  };
  std::vector<ArcState> sols;
  for (std::size_t n : {100u, 200u, 400u, 800u}) sols.push_back(run(n));
  std::vector<double> diffs;
  for (std::size_t k = 0; k + 1 < sols.size(); ++k) {
    const ArcState& c = sols[k];
    const ArcState& f = sols[k + 1];
    ScalarField d(c.positions.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = (c.positions[i] - f.positions[2 * i]).squaredNorm();
    diffs.push_back(std::sqrt(quad_trapezoid(c.grid, d)));
  }
  for (std::size_t k = 0; k + 1 < diffs.size(); ++k) EXPECT_GE(std::log2(diffs[k] / diffs[k + 1]), 0.9);
}

TEST(EvolveProperty, RotationEquivariance) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0.0, 1.0);
  Mat a(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a(i, j) = n(rng);
  Eigen::HouseholderQR<Mat> qr(a);
  const Mat rot = qr.householderQ();
  const Grid grid(100);
  const GravitySpec g = GravitySpec::down(3);
  Vec rg = rot * g.g();
  rg /= rg.norm();
  const GravitySpec gr(rg);
  ScenarioSpec spec;
  spec.kind = ScenarioKind::random_lipschitz;
  spec.seed = 5;
  const ArcState s = mollify(build(spec, grid, g), spec);
  VecField rp;
  for (const Vec& p : s.positions) rp.push_back(rot * p);
  rp.back().setZero();
  const RegularizedMap map(RegParams{1e-2}, 3);
  const ArcState fa = evolve(s, 0.3, map, g, StepperConfig{});
  const ArcState fb = evolve(ArcState(grid, rp, 0.0), 0.3, map, gr, StepperConfig{});
  ASSERT_EQ(fa.time, fb.time);
  for (std::size_t i = 0; i < fa.positions.size(); ++i) EXPECT_LE((rot * fa.positions[i] - fb.positions[i]).norm(), 1e-8);
}

TEST(Evolve, HardFailureBelowDtMin) {
  // dt pinned to one value and a Newton budget of one iteration forces a rejection that cannot be retried.
  StepperConfig cfg;
  cfg.dt_init = cfg.dt_min = cfg.dt_max = 1e-2;
  cfg.newton_max_iter = 1;
  const Grid grid(100);
  const GravitySpec g = GravitySpec::down(2);
  EXPECT_THROW(evolve(mollified(ScenarioKind::quarter_circle, grid, g), 1.0, RegularizedMap(RegParams{1e-3}, 2), g, cfg),
               SolverFailure);
}
