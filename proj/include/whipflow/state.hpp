#pragma once

#include "whipflow/grid.hpp"
#include "whipflow/linalg.hpp"

namespace whipflow {

/// Unit gravity direction g.
class GravitySpec {
 public:
  /// Throws unless |g| = 1 within 1e-14 and d is 2 or 3.
  explicit GravitySpec(Vec g);

  /// (0, -1) or (0, 0, -1).
  static GravitySpec down(int dim);

  const Vec& g() const { return g_; }
  int dim() const { return static_cast<int>(g_.size()); }

  /// -g, used for the time-reversed problem.
  GravitySpec reversed() const;

  bool operator==(const GravitySpec& other) const {
    return g_.size() == other.g_.size() && g_ == other.g_;
  }

 private:
  Vec g_;
};

/// Sampled curve eta on the nodes of a grid, at time t.
///
/// positions[n_cells] is the pinned end and is kept exactly zero by every
/// constructor in the library.
struct ArcState {
  Grid grid;
  VecField positions;
  double time = 0.0;

  ArcState(Grid g, VecField p, double t = 0.0);

  int dim() const { return positions.empty() ? 0 : static_cast<int>(positions.front().size()); }

  /// Midpoint tangents (eta_{i+1} - eta_i) / h.
  VecField tangents() const;

  /// Checks shape, uniform dimension, finiteness and the pin.
  void validate() const;
};

/// Exact equality of grid, time and every coordinate.
bool same_state(const ArcState& a, const ArcState& b);

/// Discrete L2 distance of node samples (trapezoid rule).
double l2_distance(const ArcState& a, const ArcState& b);

/// Orthonormal frame {e_1, ..., e_{d-1}} of the plane orthogonal to g,
/// chosen deterministically from the coordinate axes.
std::vector<Vec> orthogonal_frame(const GravitySpec& g);

}  // namespace whipflow
