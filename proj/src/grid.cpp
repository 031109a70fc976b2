#include "whipflow/grid.hpp"

#include <string>

#include "whipflow/errors.hpp"

namespace whipflow {

Grid::Grid(std::size_t n_cells) : n_cells_(n_cells), h_(0.0) {
  if (n_cells == 0) {
    throw std::invalid_argument("Grid: n_cells must be positive");
  }
  h_ = 1.0 / static_cast<double>(n_cells);
}

ScalarField Grid::nodes() const {
  ScalarField out(n_nodes());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = node(i);
  return out;
}

ScalarField Grid::midpoints() const {
  ScalarField out(n_cells_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = midpoint(i);
  return out;
}

void require_length(std::size_t actual, std::size_t expected, const char* what) {
  if (actual != expected) {
    throw ShapeError(std::string(what) + ": expected " + std::to_string(expected) +
                     " entries, got " + std::to_string(actual));
  }
}

VecField diff_forward(const Grid& grid, const VecField& values) {
  require_length(values.size(), grid.n_nodes(), "diff_forward");
  VecField out;
  out.reserve(grid.n_cells());
  const double inv_h = static_cast<double>(grid.n_cells());
  for (std::size_t i = 0; i < grid.n_cells(); ++i) {
    out.emplace_back((values[i + 1] - values[i]) * inv_h);
  }
  return out;
}

ScalarField diff_forward(const Grid& grid, std::span<const double> values) {
  require_length(values.size(), grid.n_nodes(), "diff_forward");
  ScalarField out(grid.n_cells());
  const double inv_h = static_cast<double>(grid.n_cells());
  for (std::size_t i = 0; i < grid.n_cells(); ++i) {
    out[i] = (values[i + 1] - values[i]) * inv_h;
  }
  return out;
}

double quad_trapezoid(const Grid& grid, std::span<const double> values) {
  require_length(values.size(), grid.n_nodes(), "quad_trapezoid");
  double interior = 0.0;
  for (std::size_t i = 1; i + 1 < values.size(); ++i) interior += values[i];
  return grid.h() * (interior + 0.5 * (values.front() + values.back()));
}

double quad_midpoint(const Grid& grid, std::span<const double> values) {
  require_length(values.size(), grid.n_cells(), "quad_midpoint");
  double sum = 0.0;
  for (double v : values) sum += v;
  return grid.h() * sum;
}

}  // namespace whipflow
