#include <iostream>

#include "cavload/cli.hpp"

int main(int argc, char** argv) { return cavload::cli::run_cli(argc, argv, std::cout, std::cerr); }
