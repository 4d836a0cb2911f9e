#include <iostream>

#include "ppdiag/cli.hpp"

int main(int argc, char** argv) { return ppdiag::run_cli(argc, argv, std::cout, std::cerr); }
