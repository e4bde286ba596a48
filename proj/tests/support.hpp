#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "proxflow/numerics.hpp"
#include "proxflow/prox.hpp"

namespace proxflow::testing {

/// Symmetric Q = P diag(eig) P^T with eigenvalues log-spaced on [mu, L].
inline Matrix spread_quadratic(Rng& rng, Eigen::Index n, double mu, double L) {
    Vector eig(n);
    for (Eigen::Index i = 0; i < n; ++i)
        eig[i] = n == 1 ? L : mu * std::pow(L / mu, static_cast<double>(i) / static_cast<double>(n - 1));
    const Matrix P = random_orthonormal(rng, n, n);
    Matrix q = P * eig.asDiagonal() * P.transpose();
    return 0.5 * (q + q.transpose());
}

/// Minimiser of a 1-D function on a uniform grid of `points` over [lo, hi].
inline double grid_argmin(const std::function<double(double)>& g, double lo, double hi, int points) {
    double best_u = lo, best = g(lo);
    const double h = (hi - lo) / (points - 1);
    for (int i = 1; i < points; ++i) {
        const double u = lo + h * i;
        const double v = g(u);
        if (v < best) {
            best = v;
            best_u = u;
        }
    }
    return best_u;
}

/// Golden-section minimiser of a unimodal 1-D function.
inline double golden_argmin(const std::function<double(double)>& g, double lo, double hi, int iters = 200) {
    const double r = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - r * (b - a), d = a + r * (b - a);
    for (int i = 0; i < iters; ++i) {
        if (g(c) < g(d))
            b = d;
        else
            a = c;
        c = b - r * (b - a);
        d = a + r * (b - a);
    }
    return 0.5 * (a + b);
}

/// Minimal XML check: balanced tags, quoted attributes, no stray '<' in text.
inline bool xml_well_formed(std::string_view doc) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    bool root_seen = false;
    while (i < doc.size()) {
        if (doc[i] != '<') {
            if (doc[i] == '>') return false;
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        char quote = 0;
        while (j < doc.size() && (quote || doc[j] != '>')) {
            if (quote && doc[j] == quote) quote = 0;
            else if (!quote && (doc[j] == '"' || doc[j] == '\'')) quote = doc[j];
            else if (!quote && doc[j] == '<') return false;
            ++j;
        }
        if (j >= doc.size()) return false;
        std::string_view tag = doc.substr(i + 1, j - i - 1);
        i = j + 1;
        if (tag.empty()) return false;
        if (tag.front() == '?') {
            if (tag.back() != '?') return false;
            continue;
        }
        if (tag.front() == '/') {
            std::string name(tag.substr(1));
            if (stack.empty() || stack.back() != name) return false;
            stack.pop_back();
            continue;
        }
        const bool self_closing = tag.back() == '/';
        std::string name(tag.substr(0, tag.find_first_of(" \t\n/")));
        if (stack.empty()) {
            if (root_seen) return false;
            root_seen = true;
        }
        if (!self_closing) stack.push_back(name);
    }
    return root_seen && stack.empty();
}

}  // namespace proxflow::testing
