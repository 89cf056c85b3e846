#include <iostream>
#include <string>
#include <vector>

#include "cohortsbi/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cohortsbi::cli_dispatch(std::move(args), std::cout, std::cerr);
}
