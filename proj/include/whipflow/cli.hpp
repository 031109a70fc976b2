#pragma once

namespace whipflow {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitNumeric = 2 };

int run_cli(int argc, char** argv);

}  // namespace whipflow
