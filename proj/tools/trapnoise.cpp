#include "trapnoise/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return trapnoise::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
