#include <iostream>

#include "gennet/cli.hpp"

int main(int argc, char** argv) { return gennet::cli::main(argc, argv, std::cout, std::cerr); }
