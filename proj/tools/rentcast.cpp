#include <iostream>

#include "rentcast/cli.hpp"

int main(int argc, char** argv) { return rentcast::cli::dispatch(argc, argv, std::cout, std::cerr); }
