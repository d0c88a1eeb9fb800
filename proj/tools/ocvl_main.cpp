#include <iostream>

#include "ocvl/cli.hpp"

int main(int argc, char** argv) { return ocvl::run_cli(argc, argv, std::cout, std::cerr); }
