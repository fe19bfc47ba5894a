#include <iostream>

#include "adablur/cli.hpp"

int main(int argc, char** argv) { return adablur::run_cli(argc, argv, std::cout, std::cerr); }
