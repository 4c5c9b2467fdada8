#include <iostream>

#include "netrecon/cli.hpp"

int main(int argc, char** argv) {
  return netrecon::cli_main(argc, argv, std::cout, std::cerr);
}
