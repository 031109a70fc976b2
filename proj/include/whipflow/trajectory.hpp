#pragma once

#include <vector>

#include "whipflow/state.hpp"
#include "whipflow/tension_bvp.hpp"

namespace whipflow {

struct Frame {
  ArcState state;
  TensionProfile tension;
};

/// Time-ordered (state, tension) snapshots computed under one gravity.
struct Trajectory {
  GravitySpec gravity;
  std::vector<Frame> frames;

  explicit Trajectory(GravitySpec g) : gravity(std::move(g)) {}
};

}  // namespace whipflow
