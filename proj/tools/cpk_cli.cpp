// cpk_cli.cpp — thin executable wrapper around the library entry point.

#include "cpk/cli.hpp"

int main(int argc, char** argv) { return cpk::run_cli(argc, argv); }
