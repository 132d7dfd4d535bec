#include <string>
#include <vector>

#include "depthlayers/cli/commands.hpp"

int main(int argc, char** argv) {
  return depthlayers::cli::run(std::vector<std::string>(argv, argv + argc));
}
