#pragma once

#include <span>
#include <vector>

#include "whipflow/linalg.hpp"

namespace whipflow {

/// Thomas algorithm for  lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i].
/// lower[0] and upper[n-1] are ignored. Throws SingularSystemError on a
/// vanishing pivot.
std::vector<double> solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                      std::span<const double> upper, std::span<const double> rhs);

/// Symmetric block-tridiagonal system with d x d blocks:
///   off[i-1]^T x[i-1] + diag[i] x[i] + off[i] x[i+1] = rhs[i].
/// `off` has one entry fewer than `diag`. Block Thomas elimination.
VecField solve_block_tridiagonal(const std::vector<Mat>& diag, const std::vector<Mat>& off,
                                 const VecField& rhs);

}  // namespace whipflow
