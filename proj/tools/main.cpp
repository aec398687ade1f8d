#include <iostream>

#include "curtail/cli.hpp"

int main(int argc, char** argv) {
  return curtail::run_cli(argc, argv, std::cout, std::cerr);
}
