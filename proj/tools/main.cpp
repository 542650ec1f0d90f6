#include <iostream>
#include <string>
#include <vector>

#include "nucleoforge/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return nucleoforge::cli::run(args, std::cout, std::cerr);
}
