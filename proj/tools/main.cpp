#include <string>
#include <vector>

#include "regalign/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return regalign::cli_dispatch(args);
}
