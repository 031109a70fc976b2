#pragma once

#include <cstdint>
#include <string>

#include "whipflow/diagnostics.hpp"
#include "whipflow/flow_solver.hpp"
#include "whipflow/trajectory.hpp"

namespace whipflow {

enum class ScenarioKind { vertical_down, vertical_up, straight_angle, quarter_circle, helix, random_lipschitz };

std::string to_string(ScenarioKind kind);
/// Throws std::invalid_argument on an unknown name.
ScenarioKind scenario_kind_from_string(const std::string& name);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::vertical_down;
  double alpha = 0.0;      ///< straight_angle: angle between the segment and g at the pin
  double eps_geom = 0.1;   ///< helix pitch parameter
  double alpha0 = 1.5707963267948966;  ///< helix angle
  std::uint64_t seed = 0;  ///< random_lipschitz
  double mollify_radius = 0.02;
  double taper_width = 0.02;
  /// Tangents are rescaled after mollification when sup |u| exceeds this.
  double slope_cap = 1.0;
};

/// Unmollified initial data. Every constructor returns eta_N = 0 exactly and
/// sup |u| <= 1 at midpoints.
ArcState build(const ScenarioSpec& spec, const Grid& grid, const GravitySpec& gravity);

/// Convolution of positions with the bump (1 - r^2)^4 of radius delta, the
/// data being extended evenly about s = 0 and oddly about s = 1. The tangent
/// is then multiplied by a smooth ramp vanishing at s = 0 over taper_width and
/// the curve is re-integrated from the pin.
ArcState mollify(const ArcState& state, const ScenarioSpec& spec);

/// Time reversal with tension negation: frame (t, eta, sigma) becomes
/// (-t, eta, -sigma), in reverse order. The input must carry gravity -g.
Trajectory backward_transform(const Trajectory& forward, const GravitySpec& g);

struct BranchingResult {
  Trajectory forward;     ///< epsilon-run from the mollified upright state
  Trajectory stationary;  ///< (eta_{-inf}, -s) held constant
  GeneralizedResidual forward_residual;
  GeneralizedResidual stationary_residual;
  double separation = 0.0;  ///< L2 distance of the two states at T
};

/// Both trajectories start from the upright state; frames are stored at the
/// requested spacing (nearest accepted step).
BranchingResult branching_pair(double horizon, const RegularizedMap& map, const Grid& grid,
                               const GravitySpec& gravity, const StepperConfig& cfg,
                               const ScenarioSpec& mollifier, double frame_spacing = 0.05);

/// Evolve and record a frame (with flux tension) after every accepted step
/// whose time is at least `frame_spacing` past the previous frame.
Trajectory record_trajectory(const ArcState& init, double horizon, const RegularizedMap& map,
                             const GravitySpec& gravity, const StepperConfig& cfg, double frame_spacing);

}  // namespace whipflow
