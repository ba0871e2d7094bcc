#include <iostream>

#include "qll/commands.hpp"

int main(int argc, char** argv) { return qll::run_cli(argc, argv, std::cout, std::cerr); }
