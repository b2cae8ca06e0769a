#include <iostream>

#include "dare_tools/cli.hpp"

int main(int argc, char** argv) {
  return dare::tools::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
