#include "whipflow/regularized_map.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "whipflow/errors.hpp"

namespace whipflow {

void RegParams::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) {
    throw std::invalid_argument("RegParams: eps must be positive and finite");
  }
  if (!(newton_tol > 0.0 && newton_tol <= 1e-6)) {
    throw std::invalid_argument("RegParams: newton_tol must lie in (0, 1e-6]");
  }
  if (newton_max_iter < 1) {
    throw std::invalid_argument("RegParams: newton_max_iter must be >= 1");
  }
}

RegularizedMap::RegularizedMap(RegParams params, int dim) : params_(params), dim_(dim) {
  params_.validate();
  if (dim != 2 && dim != 3) {
    throw DimensionError("RegularizedMap: dimension must be 2 or 3, got " + std::to_string(dim));
  }
}

void RegularizedMap::check_input(const Vec& v, const char* what) const {
  if (v.size() != dim_) {
    throw ShapeError(std::string(what) + ": vector of size " + std::to_string(v.size()) +
                     " for a map of dimension " + std::to_string(dim_));
  }
  if (!v.allFinite()) {
    throw NumericDomainError(std::string(what) + ": non-finite input");
  }
}

double RegularizedMap::radial_F(double rho) const {
  const double eps = params_.eps;
  return eps * rho + rho / std::sqrt(eps + rho * rho);
}

double RegularizedMap::radial_G(double r) const {
  if (!std::isfinite(r) || r < 0.0) {
    throw NumericDomainError("radial_G: argument must be finite and nonnegative");
  }
  if (r == 0.0) return 0.0;
  const double eps = params_.eps;
  const double tol = params_.newton_tol * (1.0 + r) * 0.25;

  // f(rho) = F(rho) - r is increasing and concave on [0, inf), and
  // eps*rho <= F(rho) < eps*rho + 1, so the root lies in [max(0,(r-1)/eps), r/eps].
  double lo = std::max(0.0, (r - 1.0) / eps);
  double hi = r / eps;
  double rho = lo;
  for (int it = 0; it < params_.newton_max_iter; ++it) {
    const double q = eps + rho * rho;
    const double f = eps * rho + rho / std::sqrt(q) - r;
    if (std::abs(f) <= tol) return rho;
    if (f < 0.0) {
      lo = rho;
    } else {
      hi = rho;
    }
    const double df = eps + eps / (q * std::sqrt(q));
    double next = rho - f / df;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == rho) return rho;
    rho = next;
  }
  const double f = radial_F(rho) - r;
  if (std::abs(f) <= 4.0 * tol) return rho;
  std::ostringstream msg;
  msg << "radial_G: no convergence after " << params_.newton_max_iter << " iterations (eps=" << eps
      << ", r=" << r << ", residual=" << f << ")";
  throw InversionError(msg.str());
}

Vec RegularizedMap::apply_F(const Vec& kappa) const {
  check_input(kappa, "apply_F");
  const double eps = params_.eps;
  return (eps + 1.0 / std::sqrt(eps + kappa.squaredNorm())) * kappa;
}

Vec RegularizedMap::apply_G(const Vec& tau) const {
  check_input(tau, "apply_G");
  const double r = tau.norm();
  if (r == 0.0) return Vec::Zero(dim_);
  return (radial_G(r) / r) * tau;
}

SpectralBounds RegularizedMap::bounds_from_rho(double rho) const {
  const double eps = params_.eps;
  const double q = eps + rho * rho;
  // Tangential and radial eigenvalues of grad F are eps + q^{-1/2} and
  // eps*(1 + q^{-3/2}); grad G has their reciprocals.
  return {1.0 / (eps + 1.0 / std::sqrt(q)), (1.0 / eps) / (1.0 + 1.0 / (q * std::sqrt(q)))};
}

double RegularizedMap::potential_from_rho(double rho) const {
  const double eps = params_.eps;
  return eps * (0.5 * rho * rho - 1.0 / std::sqrt(eps + rho * rho));
}

Mat RegularizedMap::jacobian_G(const Vec& tau) const { return evaluate(tau).jacobian; }

SpectralBounds RegularizedMap::spectral_bounds(const Vec& tau) const {
  check_input(tau, "spectral_bounds");
  return bounds_from_rho(radial_G(tau.norm()));
}

double RegularizedMap::potential_Gtilde(const Vec& u) const {
  check_input(u, "potential_Gtilde");
  return potential_from_rho(radial_G(u.norm()));
}

RegularizedMap::Evaluation RegularizedMap::evaluate(const Vec& u) const {
  check_input(u, "evaluate");
  const double r = u.norm();
  const double rho = radial_G(r);
  const SpectralBounds b = bounds_from_rho(rho);
  Evaluation out;
  out.jacobian = b.lambda * Mat::Identity(dim_, dim_);
  if (r > 0.0) {
    const Vec dir = u / r;
    out.G = rho * dir;
    out.jacobian.noalias() += (b.Lambda - b.lambda) * (dir * dir.transpose());
  } else {
    out.G = Vec::Zero(dim_);
  }
  out.potential = potential_from_rho(rho);
  return out;
}

}  // namespace whipflow
