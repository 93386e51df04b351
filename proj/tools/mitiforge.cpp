#include <iostream>

#include "mitiforge/cli.hpp"

int main(int argc, char** argv) { return mitiforge::cli::run(argc, argv, std::cout, std::cerr); }
