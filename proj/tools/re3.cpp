#include <iostream>
#include <string>
#include <vector>

#include "re3/cli.hpp"

int main(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return re3::cli::dispatch(args, std::cout, std::cerr);
}
