#pragma once

#include "whipflow/linalg.hpp"

namespace whipflow {

struct RegParams {
  double eps = 1e-2;
  /// Relative tolerance of the radial inversion.
  double newton_tol = 1e-12;
  int newton_max_iter = 100;

  void validate() const;
};

/// Spectral envelope of the Jacobian of G^eps at a point.
struct SpectralBounds {
  double lambda;  ///< eigenvalue on the plane orthogonal to tau
  double Lambda;  ///< radial eigenvalue
};

/// Regularized constitutive map and its inverse.
///
///   F(kappa) = eps*kappa + kappa / sqrt(eps + |kappa|^2),   G = F^{-1}.
///
/// F is radial and strictly monotone in |kappa|, so G reduces to a scalar
/// root-finding problem along the ray of tau. All evaluators are const and
/// thread-safe.
class RegularizedMap {
 public:
  RegularizedMap(RegParams params, int dim);

  const RegParams& params() const { return params_; }
  double eps() const { return params_.eps; }
  int dim() const { return dim_; }

  Vec apply_F(const Vec& kappa) const;
  Vec apply_G(const Vec& tau) const;

  /// |F(kappa)| as a function of |kappa|.
  double radial_F(double rho) const;
  /// The unique rho >= 0 with radial_F(rho) = r.
  double radial_G(double r) const;

  /// Analytic inverse-function Jacobian (grad F)^{-1} at kappa = G(tau).
  Mat jacobian_G(const Vec& tau) const;
  SpectralBounds spectral_bounds(const Vec& tau) const;

  /// Potential whose gradient is G:  eps * (|G(u)|^2 / 2 - 1/sqrt(eps + |G(u)|^2)).
  double potential_Gtilde(const Vec& u) const;

  /// G, its Jacobian and the potential at one point, sharing one inversion.
  struct Evaluation {
    Vec G;
    Mat jacobian;
    double potential;
  };
  Evaluation evaluate(const Vec& u) const;

 private:
  void check_input(const Vec& v, const char* what) const;
  SpectralBounds bounds_from_rho(double rho) const;
  double potential_from_rho(double rho) const;

  RegParams params_;
  int dim_;
};

}  // namespace whipflow
