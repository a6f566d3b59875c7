#include <iostream>

#include "softgem/cli.hpp"

int main(int argc, char **argv) { return softgem::cli_main(argc, argv, std::cout, std::cerr); }
