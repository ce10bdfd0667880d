#include <iostream>

#include "etsfs/cli/cli.hpp"

int main(int argc, char** argv) {
    return etsfs::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
