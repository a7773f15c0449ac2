#include "splatpiv/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return splatpiv::cli::run(argc, argv, std::cout, std::cerr);
}
