#include <iostream>

#include "trajprune/cli.h"

int main(int argc, char** argv) {
  return trajprune::cli::Run(argc, argv, std::cin, std::cout, std::cerr);
}
