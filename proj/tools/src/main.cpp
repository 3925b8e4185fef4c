#include <iostream>

#include "mvsim_cli/cli.hpp"

int main(int argc, char** argv) { return mvsim::cli::cli_main(argc, argv, std::cout, std::cerr); }
