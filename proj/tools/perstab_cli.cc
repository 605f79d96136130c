#include <iostream>

#include "perstab/cli.h"

int main(int argc, char** argv) {
  return perstab::cli::main(argc, argv, std::cout, std::cerr);
}
