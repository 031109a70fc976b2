#include "whipflow/state.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "whipflow/errors.hpp"

namespace whipflow {

GravitySpec::GravitySpec(Vec g) : g_(std::move(g)) {
  if (g_.size() != 2 && g_.size() != 3) {
    throw DimensionError("GravitySpec: dimension must be 2 or 3");
  }
  if (!g_.allFinite() || std::abs(g_.norm() - 1.0) > 1e-14) {
    throw std::invalid_argument("GravitySpec: g must be a unit vector");
  }
}

GravitySpec GravitySpec::down(int dim) {
  if (dim != 2 && dim != 3) throw DimensionError("GravitySpec::down: dimension must be 2 or 3");
  Vec g = Vec::Zero(dim);
  g[dim - 1] = -1.0;
  return GravitySpec(g);
}

GravitySpec GravitySpec::reversed() const { return GravitySpec(Vec(-g_)); }

ArcState::ArcState(Grid g, VecField p, double t) : grid(g), positions(std::move(p)), time(t) {
  require_length(positions.size(), grid.n_nodes(), "ArcState");
}

VecField ArcState::tangents() const { return diff_forward(grid, positions); }

void ArcState::validate() const {
  require_length(positions.size(), grid.n_nodes(), "ArcState");
  const int d = dim();
  if (d != 2 && d != 3) throw DimensionError("ArcState: dimension must be 2 or 3");
  for (const Vec& p : positions) {
    if (p.size() != d) throw ShapeError("ArcState: mixed vector dimensions");
    if (!p.allFinite()) throw NumericDomainError("ArcState: non-finite position");
  }
  if (!(positions.back().array() == 0.0).all()) {
    throw ContractError("ArcState: pinned end eta(1) must be exactly zero");
  }
  // Backward trajectories carry negative times, so only finiteness is checked.
  if (!std::isfinite(time)) throw NumericDomainError("ArcState: non-finite time");
}

bool same_state(const ArcState& a, const ArcState& b) {
  if (!(a.grid == b.grid) || a.time != b.time || a.positions.size() != b.positions.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.positions.size(); ++i) {
    if (a.positions[i].size() != b.positions[i].size() || a.positions[i] != b.positions[i]) {
      return false;
    }
  }
  return true;
}

double l2_distance(const ArcState& a, const ArcState& b) {
  require_length(b.positions.size(), a.positions.size(), "l2_distance");
  ScalarField sq(a.positions.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    sq[i] = (a.positions[i] - b.positions[i]).squaredNorm();
  }
  return std::sqrt(quad_trapezoid(a.grid, sq));
}

std::vector<Vec> orthogonal_frame(const GravitySpec& gravity) {
  const Vec& g = gravity.g();
  const int d = gravity.dim();
  std::vector<Vec> frame;
  // Gram-Schmidt over the axes, least aligned with g first.
  std::vector<int> order(d);
  for (int i = 0; i < d; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return std::abs(g[a]) < std::abs(g[b]); });
  for (int axis : order) {
    if (static_cast<int>(frame.size()) == d - 1) break;
    Vec e = Vec::Zero(d);
    e[axis] = 1.0;
    e -= e.dot(g) * g;
    for (const Vec& f : frame) e -= e.dot(f) * f;
    const double n = e.norm();
    if (n < 1e-8) continue;
    frame.push_back(e / n);
  }
  return frame;
}

}  // namespace whipflow
