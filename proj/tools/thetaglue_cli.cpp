#include <iostream>

#include "thetaglue/cli.hpp"

int main(int argc, char** argv) { return thetaglue::cli::run(argc, argv, std::cout, std::cerr); }
