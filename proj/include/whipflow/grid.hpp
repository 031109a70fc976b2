#pragma once

#include <cstddef>
#include <span>

#include "whipflow/linalg.hpp"

namespace whipflow {

/// Uniform arc-length grid on [0, 1]: nodes s_i = i/n, midpoints s_{i+1/2}.
///
/// Positions and tensions live on nodes; tangents and fluxes live on
/// midpoints. Immutable once built.
class Grid {
 public:
  explicit Grid(std::size_t n_cells);

  std::size_t n_cells() const { return n_cells_; }
  std::size_t n_nodes() const { return n_cells_ + 1; }
  double h() const { return h_; }

  double node(std::size_t i) const { return static_cast<double>(i) / static_cast<double>(n_cells_); }
  double midpoint(std::size_t i) const {
    return (static_cast<double>(i) + 0.5) / static_cast<double>(n_cells_);
  }

  ScalarField nodes() const;
  ScalarField midpoints() const;

  bool operator==(const Grid& other) const { return n_cells_ == other.n_cells_; }

 private:
  std::size_t n_cells_;
  double h_;
};

/// (values[i+1] - values[i]) / h for each cell.
VecField diff_forward(const Grid& grid, const VecField& values);
ScalarField diff_forward(const Grid& grid, std::span<const double> values);

/// Trapezoid rule over node samples.
double quad_trapezoid(const Grid& grid, std::span<const double> values);

/// Midpoint rule over cell samples.
double quad_midpoint(const Grid& grid, std::span<const double> values);

/// Throws ShapeError unless `actual == expected`.
void require_length(std::size_t actual, std::size_t expected, const char* what);

}  // namespace whipflow
