#include <iostream>

#include "pixcurate/cli.hpp"

int main(int argc, char** argv) { return pixcurate::run_cli(argc, argv, std::cout, std::cerr); }
