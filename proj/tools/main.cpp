#include <iostream>

#include "slds/cli.hpp"

int main(int argc, char** argv) { return slds::run_cli(argc, argv, std::cout, std::cerr); }
