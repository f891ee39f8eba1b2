#include <iostream>

#include "ellipspin/cli.hpp"

int main(int argc, char** argv) { return ellipspin::cli::run(argc, argv, std::cout, std::cerr); }
