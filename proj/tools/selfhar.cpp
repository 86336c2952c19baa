#include <iostream>

#include "selfhar/cli.hpp"

int main(int argc, char** argv) { return selfhar::cli::run_cli(argc, argv, std::cout, std::cerr); }
