#include <iostream>
#include <string>
#include <vector>

#include "videokit/zoo/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return videokit::zoo::run_cli(args, std::cout, std::cerr);
}
