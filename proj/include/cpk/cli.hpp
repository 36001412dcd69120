// cli.hpp — command-line entry point.
#pragma once

namespace cpk {

/// Parses arguments and runs one subcommand (explain, optimize,
/// compare-baseline, domains). Returns the process exit code; failures print
/// a machine-readable {"error": {...}} object to stdout and return 1.
int run_cli(int argc, char** argv);

}  // namespace cpk
