#include "carleman/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return carleman::run_cli(argc, argv, std::cout, std::cerr); }
