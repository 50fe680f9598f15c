#include <iostream>

#include "loyalda/cli.hpp"

int main(int argc, char** argv) {
  return loyalda::cli_main({argv + 1, argv + argc}, std::cout, std::cerr);
}
