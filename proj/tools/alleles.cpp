#include <iostream>
#include <string>
#include <vector>

#include "alleles/cli.hpp"

int main(int argc, char** argv) {
  return alleles::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
