#include <string>
#include <vector>

#include "mitodet/pipeline/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mitodet::pipeline::run_command(args);
}
