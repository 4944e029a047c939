#include <iostream>

#include "duquant/cli.hpp"

int main(int argc, char** argv) {
  return duquant::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
