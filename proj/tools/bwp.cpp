#include "bwp/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return bwp::run_cli(argc, argv, std::cout, std::cerr); }
