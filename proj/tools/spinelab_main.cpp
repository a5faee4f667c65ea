#include <iostream>

#include "spinelab/cli.hpp"

int main(int argc, char** argv) { return spinelab::run_cli(argc, argv, std::cout, std::cerr); }
