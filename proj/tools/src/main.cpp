#include "cbidr/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return cbidr::cli_main(argc, argv, std::cout, std::cerr); }
