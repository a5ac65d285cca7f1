#include <iostream>

#include "bikevol/cli/cli.hpp"

int main(int argc, char** argv) { return bikevol::cli::run(argc, argv, std::cout, std::cerr); }
