// Thin argv shim over run_cli; all command behavior lives in commands.cpp
// so tests can drive the CLI in-process.
#include <iostream>
#include <string>
#include <vector>

#include "commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return m2rec::cli::run_cli(args, std::cout, std::cerr);
}
