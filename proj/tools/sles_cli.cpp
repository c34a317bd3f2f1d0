#include <iostream>

#include "sles/cli.hpp"

int main(int argc, char** argv) { return sles::run_cli(argc, argv, std::cout, std::cerr); }
