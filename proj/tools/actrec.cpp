#include <iostream>

#include "actrec/cli.hpp"

int main(int argc, char** argv) { return actrec::run_cli(argc, argv, std::cout, std::cerr); }
