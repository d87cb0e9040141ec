#include <iostream>

#include "hkest/commands.hpp"

int main(int argc, char** argv) { return hkest::run_cli(argc, argv, std::cout, std::cerr); }
