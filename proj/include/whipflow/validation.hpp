#pragma once

#include <string>
#include <vector>

namespace whipflow {

struct CheckResult {
  std::string name;
  bool passed;
  std::string detail;
};

/// Quick invariant checks of every module (the `validate` subcommand).
std::vector<CheckResult> run_invariant_suite();

}  // namespace whipflow
