#include "inclusion_lab/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return inclusion_lab::cli::run(argc, argv, std::cout, std::cerr); }
