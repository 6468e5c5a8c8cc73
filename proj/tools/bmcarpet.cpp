#include <iostream>

#include "bmcarpet/cli.hpp"

int main(int argc, char** argv) { return bmc::cli::run(argc, argv, std::cout, std::cerr); }
