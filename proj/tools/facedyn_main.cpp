#include <iostream>

#include "facedyn/cli.hpp"

int main(int argc, char** argv) {
  return facedyn::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
