#include <iostream>

#include "wntags/service.hpp"

int main(int argc, char** argv) { return wntags::run_cli(argc, argv, std::cout, std::cerr); }
