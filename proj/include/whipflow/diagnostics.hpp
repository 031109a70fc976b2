#pragma once

#include <optional>
#include <span>
#include <vector>

#include "whipflow/regularized_map.hpp"
#include "whipflow/state.hpp"
#include "whipflow/tension_bvp.hpp"
#include "whipflow/trajectory.hpp"

namespace whipflow {

/// E(eta_inf) for the downward vertical state; checked once by quadrature.
double equilibrium_energy();

/// Reference constants of the decay analysis.
inline constexpr double kHardyReference = 0.25;        // C-bar
inline constexpr double kDecayRateReference = 1.0 / 16.0;  // c0 = C-bar / 4

struct EnergyReport {
  double t = 0.0;
  double E = 0.0;
  double E_alt = 0.0;
  double E_rel = 0.0;
  double E_rel_back = 0.0;
  double E_eps = 0.0;
  double D = 0.0;
  double cos_alpha = 0.0;
  double max_stretch = 0.0;
  double constraint_L1 = 0.0;
  double sigma_at_1 = 0.0;

  bool operator==(const EnergyReport&) const = default;
};

/// Potential energy  int (-g).eta  by the trapezoid rule.
double potential_energy(const ArcState& state, const GravitySpec& gravity);

/// Tension of the regularized flux: at midpoints G(u).u/|u|^2 so that
/// sigma u = G(u) exactly; averaged to interior nodes, zero at s = 0 and
/// linearly extrapolated (clipped at zero) to s = 1.
TensionProfile flux_tension(const ArcState& state, const RegularizedMap& map);

EnergyReport report(const ArcState& state, const RegularizedMap& map, const GravitySpec& gravity);

struct GeneralizedResidual {
  double pde_residual_L2 = 0.0;
  double constraint_product_L2 = 0.0;
  double stretch_violation = 0.0;
  double diss_inequality_slack = 0.0;
};

enum class TimeStencil {
  backward,  ///< flux at the later frame of each interval, as in the implicit scheme
  centered,  ///< average of both endpoint fluxes; invariant under time reversal
};

/// Residuals of the generalized-solution conditions on a discrete trajectory.
/// Time derivatives are difference quotients between consecutive frames.
GeneralizedResidual generalized_residual(const Trajectory& trajectory,
                                         TimeStencil stencil = TimeStencil::backward);

struct EnergyIdentity {
  double lhs;
  double rhs;
  double gap;
};

EnergyIdentity relative_energy_identity_check(const ArcState& state, const GravitySpec& gravity);

/// int s^{-1}|f|^2 / int |f'|^2 on midpoints. samples[0] must vanish.
double hardy_check(const Grid& grid, const VecField& samples);

struct DecayFit {
  double t_start = 0.0;
  double t_end = 0.0;
  double rate = 0.0;
  double r_squared = 0.0;
  double cbar0_check = 0.0;
  double log_intercept = 0.0;  ///< fitted log E_rel at t = 0
  std::size_t points = 0;
};

/// [first t with E_rel <= hi * E_rel(0), last t with E_rel >= lo * E_rel(0)].
/// Empty if the series never enters the band.
std::optional<std::pair<double, double>> energy_window(std::span<const EnergyReport> reports, double lo,
                                                       double hi);

/// Least-squares fit of log E_rel against t on reports with t in [t0, t1].
/// Throws ContractError with fewer than 10 points or E_rel <= 0 in the window.
DecayFit decay_fit(std::span<const EnergyReport> reports, std::pair<double, double> window);

struct SigmaDecayResult {
  std::vector<double> t;
  std::vector<double> tail;   ///< int_t^T int s^{-1} |sigma - s|^2
  std::vector<double> bound;  ///< (4 c0)^{-3/2} E_rel(0)^{1/2} exp(-c0 t / 2)
  std::size_t violations = 0;
  double c0 = 0.0;
};

/// Tail integrals of the tension deviation. Refuses (ContractError) unless
/// E_rel at the last frame is below 1e-3 E_rel at the first.
SigmaDecayResult sigma_decay_check(const Trajectory& trajectory, std::span<const double> t_grid, double c0);

struct Compatibility {
  bool holds;
  double lhs;
  double rhs;
};

Compatibility compatibility_predicate(const ArcState& state, const GravitySpec& gravity);

}  // namespace whipflow
