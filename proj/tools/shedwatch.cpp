#include <iostream>
#include <string>
#include <vector>

#include "shedwatch/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return shedwatch::run_cli(args, std::cout, std::cerr);
}
