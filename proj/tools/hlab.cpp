#include "hlab/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return hlab::run_cli(argc, argv, std::cout, std::cerr); }
