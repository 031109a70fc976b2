#include "whipflow/tridiagonal.hpp"

#include <cmath>
#include <string>

#include "whipflow/errors.hpp"
#include "whipflow/grid.hpp"

namespace whipflow {

std::vector<double> solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                      std::span<const double> upper, std::span<const double> rhs) {
  const std::size_t n = diag.size();
  require_length(lower.size(), n, "solve_tridiagonal lower");
  require_length(upper.size(), n, "solve_tridiagonal upper");
  require_length(rhs.size(), n, "solve_tridiagonal rhs");
  std::vector<double> c(n, 0.0);
  std::vector<double> x(n, 0.0);
  if (n == 0) return x;

  double pivot = diag[0];
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) pivot = diag[i] - lower[i] * c[i - 1];
    if (pivot == 0.0 || !std::isfinite(pivot)) {
      throw SingularSystemError("solve_tridiagonal: zero pivot at row " + std::to_string(i));
    }
    c[i] = (i + 1 < n) ? upper[i] / pivot : 0.0;
    x[i] = (rhs[i] - (i > 0 ? lower[i] * x[i - 1] : 0.0)) / pivot;
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
  return x;
}

VecField solve_block_tridiagonal(const std::vector<Mat>& diag, const std::vector<Mat>& off,
                                 const VecField& rhs) {
  const std::size_t n = diag.size();
  require_length(rhs.size(), n, "solve_block_tridiagonal rhs");
  if (n == 0) return {};
  require_length(off.size(), n - 1, "solve_block_tridiagonal off");

  std::vector<Mat> c(n);
  VecField x(n);
  Mat pivot = diag[0];
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) pivot = diag[i] - off[i - 1].transpose() * c[i - 1];
    Eigen::PartialPivLU<Mat> lu(pivot);
    if (!std::isfinite(lu.determinant()) || lu.determinant() == 0.0) {
      throw SingularSystemError("solve_block_tridiagonal: singular pivot block at row " +
                                std::to_string(i));
    }
    if (i + 1 < n) c[i] = lu.solve(off[i]);
    Vec b = rhs[i];
    if (i > 0) b.noalias() -= off[i - 1].transpose() * x[i - 1];
    x[i] = lu.solve(b);
  }
  for (std::size_t i = n - 1; i-- > 0;) x[i].noalias() -= c[i] * x[i + 1];
  return x;
}

}  // namespace whipflow
