#include <iostream>

#include "formfunc/app/cli.hpp"

int main(int argc, char** argv) { return formfunc::cli::run(argc, argv, std::cout, std::cerr); }
