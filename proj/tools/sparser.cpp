#include "dss/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return dss::harness::cli_main(argc, argv, std::cout, std::cerr); }
