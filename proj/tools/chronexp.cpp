#include <iostream>

#include "chronexp/cli.hpp"

int main(int argc, char** argv) { return chronexp::cli::run(argc, argv, std::cout, std::cerr); }
