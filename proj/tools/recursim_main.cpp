#include <iostream>

#include "recursim/cli.hpp"

int main(int argc, char** argv) {
  return recursim::cli::run(argc, argv, std::cout, std::cerr);
}
