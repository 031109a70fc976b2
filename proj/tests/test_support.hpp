#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "whipflow/grid.hpp"
#include "whipflow/state.hpp"

namespace whipflow::testing {

inline Vec vec2(double a, double b) { return (Vec(2) << a, b).finished(); }

// eta_inf = (1 - s) g and eta_-inf = (s - 1) g, written out directly.
inline ArcState hanging(const Grid& grid, const GravitySpec& g, double sign) {
  VecField p;
  for (std::size_t i = 0; i < grid.n_nodes(); ++i) p.push_back(sign * (1.0 - grid.node(i)) * g.g());
  p.back().setZero();
  return ArcState(grid, p, 0.0);
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("whipflow_test_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace whipflow::testing
