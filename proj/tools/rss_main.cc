#include <iostream>
#include <string>
#include <vector>

#include "rss/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return rss::RunCli(args, std::cout, std::cerr);
}
