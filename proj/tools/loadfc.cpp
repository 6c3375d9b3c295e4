#include <iostream>

#include "loadfc/cli/app.hpp"

int main(int argc, char** argv) {
  return loadfc::cli::run_cli(argc, argv, std::cout, std::cerr);
}
