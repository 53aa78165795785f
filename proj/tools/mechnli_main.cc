#include <iostream>
#include <string>
#include <vector>

#include "mechnli/cli.h"

int main(int argc, char **argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mechnli::RunCli(args, std::cout, std::cerr);
}
