#include <string>
#include <vector>

#include "dpd/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dpd::run_command(args);
}
