#include <iostream>
#include <string>
#include <vector>

#include "hydroqkd/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return hydroqkd::cli::run(args, std::cout, std::cerr);
}
