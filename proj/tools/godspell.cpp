#include <iostream>
#include <string>
#include <vector>

#include "godspell/report.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return godspell::report::run_cli(args, std::cout, std::cerr);
}
