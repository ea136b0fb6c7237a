#include <iostream>

#include "sgacs/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return sgacs::run_cli(args, std::cout, std::cerr);
}
