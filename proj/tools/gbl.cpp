#include <iostream>

#include "gbl/cli.hpp"

int main(int argc, char** argv) { return gbl::cli::run(argc, argv, std::cout, std::cerr); }
