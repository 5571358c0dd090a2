#include <iostream>
#include <string>
#include <vector>

#include "hiermodel/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return hiermodel::cli::dispatch(args, std::cout, std::cerr);
}
