#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "proxflow/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    std::optional<std::string> env_seed;
    if (const char* s = std::getenv("PROXFLOW_SEED"); s && *s) env_seed = s;
    return proxflow::cli::run(args, std::cout, std::cerr, env_seed);
}
