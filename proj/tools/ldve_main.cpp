#include <iostream>
#include <vector>

#include "ldve/io.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ldve::cli_main(args, std::cout, std::cerr);
}
