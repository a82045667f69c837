#include <string>
#include <vector>

#include "eplim/cli.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return eplim::cli::eplim_main(args);
}
