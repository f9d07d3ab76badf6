#include "locov/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return locov::run_cli(argc, argv, std::cout, std::cerr); }
