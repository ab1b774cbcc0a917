#include <iostream>
#include <string>
#include <vector>

#include "ckgnn/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return ckgnn::cli::run_command(std::move(args), std::cout);
}
