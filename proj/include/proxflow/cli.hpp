#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace proxflow::cli {

enum ExitCode : int {
    exit_ok = 0,
    exit_runtime = 1,
    exit_usage = 2,
    exit_divergence = 3,
    exit_tolerance = 4,
};

/// Full command-line entry point. `env_seed` is the value of PROXFLOW_SEED, if set.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        std::optional<std::string> env_seed = std::nullopt);

}  // namespace proxflow::cli
