#include "aggregame/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return aggregame::cli::run(argc, argv, std::cout, std::cerr); }
