#include "phdg/cli.hpp"

int main(int argc, char** argv) {
  return phdg::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
