#include <iostream>

#include "augur/cli.hpp"

int main(int argc, char** argv) { return augur::run_cli(argc, argv, std::cout, std::cerr); }
