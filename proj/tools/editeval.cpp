#include <iostream>
#include <string>
#include <vector>

#include "editeval/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return editeval::Dispatch(args, std::cout, std::cerr);
}
