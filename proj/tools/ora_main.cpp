#include <iostream>
#include <string>
#include <vector>

#include "ora/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ora::cli::run(args, std::cout, std::cerr);
}
