#include <string>
#include <vector>

#include "fracreg/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return fracreg::cli::run(std::move(args));
}
