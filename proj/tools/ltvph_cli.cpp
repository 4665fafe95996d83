#include <iostream>

#include "ltvph/cli.hpp"

int main(int argc, char** argv) {
    return ltvph::cli::run(argc, argv, std::cout, std::cerr);
}
