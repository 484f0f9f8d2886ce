#include <iostream>
#include <string>
#include <vector>

#include "rawnet/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return rawnet::cli::run(args, std::cout, std::cerr);
}
