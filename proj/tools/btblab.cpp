#include <iostream>

#include "btblab/cli.hpp"

int main(int argc, char** argv) { return btblab::run_cli(argc, argv, std::cout, std::cerr); }
