#include <iostream>

#include "fraclab/cli.hpp"

int main(int argc, char** argv) { return fraclab::cli::run_command(argc, argv, std::cout, std::cerr); }
