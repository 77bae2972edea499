#include <iostream>

#include "revtrack/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return revtrack::cli::dispatch(std::move(args), std::cout, std::cerr);
}
