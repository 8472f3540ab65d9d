#include <iostream>

#include "rlc/cli.hpp"

int main(int argc, char** argv) { return rlc::cli::run(argc, argv, std::cout, std::cerr); }
