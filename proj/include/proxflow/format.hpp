#pragma once

#include <cstdio>
#include <string>

namespace proxflow {

/// Shortest-safe decimal for CSV output: 17 significant digits round-trips
/// every finite double exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace proxflow
