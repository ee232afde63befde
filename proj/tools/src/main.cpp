#include <iostream>
#include <string>
#include <vector>

#include "byzfed_cli/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return byzfed::cli::run(args, std::cout, std::cerr);
}
