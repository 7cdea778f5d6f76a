#include <iostream>

#include "cli.h"

int main(int argc, char** argv) {
  return consensus_fdi::cli::Main({argv + 1, argv + argc}, std::cout, std::cerr);
}
