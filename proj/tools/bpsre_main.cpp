#include <iostream>

#include "bpsre/cli.hpp"

int main(int argc, char** argv) {
    return bpsre::cli::main_entry(argc, argv, std::cout, std::cerr);
}
