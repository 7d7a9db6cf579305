#include <string>
#include <vector>

#include "foliograd/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return foliograd::cli::run_command(std::move(args));
}
