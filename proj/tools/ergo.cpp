#include "ergo/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return ergo::cli::parse_and_dispatch(argc, argv, std::cout, std::cerr); }
