#include <iostream>

#include "anosovlab/cli.hpp"

int main(int argc, char** argv) { return anosovlab::cli::run(argc, argv, std::cout, std::cerr); }
