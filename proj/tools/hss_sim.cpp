#include <iostream>

#include "hss/cli.hpp"

int main(int argc, char** argv) {
  return hss::cli_main(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
