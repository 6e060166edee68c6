#include <iostream>

#include "nids/cli.hpp"

int main(int argc, char** argv) {
    return nids::cli_main(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
