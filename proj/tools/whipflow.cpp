#include "whipflow/cli.hpp"

int main(int argc, char** argv) { return whipflow::run_cli(argc, argv); }
