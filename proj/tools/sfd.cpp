// sfd.cpp: Command-line entry point

#include <iostream>
#include <string>
#include <vector>

#include "sfd/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return sfd::run_cli(args, std::cout, std::cerr);
}
