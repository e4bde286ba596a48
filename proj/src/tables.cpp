#include "proxflow/tables.hpp"

#include <cmath>
#include <sstream>

#include "proxflow/format.hpp"
#include "proxflow/multistep.hpp"
#include "proxflow/parallel.hpp"

namespace proxflow {

std::string_view to_string(TableStatus s) {
    switch (s) {
        case TableStatus::pass: return "pass";
        case TableStatus::escape: return "escape";
        case TableStatus::fail: return "fail";
    }
    return "fail";
}

double TableRow::abs_diff() const { return std::abs(computed - published); }

namespace {

constexpr double kMu = 1.0;
constexpr double kPpmTol = 0.005;
constexpr double kBdfTol = 0.02;

struct Published {
    int order;
    int m;
    double beta;
    double at_l2;
    double at_l10;
};

// table2.csv: m = 4, stability edge of alpha.
constexpr Published kTable2[] = {
    {1, 4, 1.0, 0.667, 0.182},  {1, 4, 10.0, 0.952, 0.198}, {2, 4, 1.0, 0.665, 0.181},
    {2, 4, 10.0, 0.940, 0.197}, {3, 4, 1.0, 0.608, 0.178},  {3, 4, 10.0, 0.940, 0.197},
};

// table3.csv: optimal rho over alpha.
constexpr Published kTable3[] = {
    {1, 4, 1.0, 0.500, 0.596},   {1, 20, 1.0, 0.500, 0.500},  {1, 4, 10.0, 0.0935, 0.466},
    {1, 20, 10.0, 0.0909, 0.100}, {2, 4, 1.0, 0.326, 0.282},   {2, 20, 1.0, 0.303, 0.211},
    {2, 4, 10.0, 0.059, 0.423},  {2, 20, 10.0, 0.024, 0.024}, {3, 4, 1.0, 0.377, 0.451},
    {3, 20, 1.0, 0.377, 0.306},  {3, 4, 10.0, 0.197, 0.459},  {3, 20, 10.0, 0.197, 0.165},
};

std::vector<TableRow> skeleton(int table, std::span<const Published> entries, bool ppm_only) {
    std::vector<TableRow> rows;
    for (const auto& e : entries) {
        if (ppm_only && e.order != 1) continue;
        for (double L : {2.0, 10.0}) {
            TableRow r;
            r.table = table;
            r.order = e.order;
            r.method = e.order == 1 ? "PPM" : "BDF" + std::to_string(e.order);
            r.m = e.m;
            r.beta = e.beta;
            r.L = L;
            r.mu = kMu;
            r.published = L == 2.0 ? e.at_l2 : e.at_l10;
            r.tolerance = e.order == 1 ? kPpmTol : kBdfTol;
            rows.push_back(r);
        }
    }
    return rows;
}

void settle(TableRow& r, std::size_t steps) {
    const auto check = table_companion_check(r, steps);
    r.companion_discrepancy = check.max_discrepancy / std::max(check.max_iterate_norm, 1.0);
    r.companion_passed = check.passed;
    if (r.abs_diff() <= r.tolerance)
        r.status = TableStatus::pass;
    else if (!r.is_ppm() && r.companion_passed)
        r.status = TableStatus::escape;
    else
        r.status = TableStatus::fail;
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

CompanionCheck table_companion_check(const TableRow& row, std::size_t steps) {
    constexpr Eigen::Index n = 4;
    Rng rng(0x5eedULL + static_cast<std::uint64_t>(row.order * 1000 + row.m) +
            static_cast<std::uint64_t>(row.beta * 10 + row.L * 100));
    Vector eig(n);
    for (Eigen::Index i = 0; i < n; ++i)
        eig[i] = row.mu * std::pow(row.L / row.mu, static_cast<double>(i) / static_cast<double>(n - 1));
    const Matrix Qr = random_orthonormal(rng, n, n);
    Matrix Q = Qr * eig.asDiagonal() * Qr.transpose();
    Q = 0.5 * (Q + Q.transpose()).eval();
    const Vector x0 = rng.normal_vector(n);
    CompanionSpec spec{bdf_coefficients(row.order).xi, row.alpha, row.beta, row.m};
    return simulate_companion_check(spec, Q, x0, steps);
}

std::vector<TableRow> compute_table2(const TableOptions& options) {
    auto rows = skeleton(2, kTable2, options.ppm_only);
    parallel_for(rows.size(), options.jobs, [&](std::size_t i) {
        auto& r = rows[i];
        const auto edge = max_stable_alpha(r.mu, r.L, r.beta, r.m, bdf_coefficients(r.order).xi);
        r.alpha = edge.alpha;
        r.computed = edge.alpha;
        settle(r, options.companion_steps);
    });
    return rows;
}

std::vector<TableRow> compute_table3(const TableOptions& options) {
    auto rows = skeleton(3, kTable3, options.ppm_only);
    parallel_for(rows.size(), options.jobs, [&](std::size_t i) {
        auto& r = rows[i];
        const auto xi = bdf_coefficients(r.order).xi;
        const auto best = optimal_rate(r.mu, r.L, r.beta, r.m, xi);
        r.alpha = best.alpha;
        r.computed = best.rho;
        if (options.real_part_diagnostic)
            r.real_part = optimal_rate(r.mu, r.L, r.beta, r.m, xi, RadiusMeasure::real_part).rho;
        settle(r, options.companion_steps);
    });
    return rows;
}

std::string table2_csv(const std::vector<TableRow>& rows) {
    std::ostringstream os;
    os << "method,m,beta,L,mu,computed_alpha,published_alpha,abs_diff,tolerance,status,companion_discrepancy\n";
    for (const auto& r : rows)
        os << r.method << ',' << r.m << ',' << fmt(r.beta) << ',' << fmt(r.L) << ',' << fmt(r.mu) << ','
           << fmt(r.computed) << ',' << fmt(r.published) << ',' << fmt(r.abs_diff()) << ',' << fmt(r.tolerance) << ','
           << to_string(r.status) << ',' << fmt(r.companion_discrepancy) << '\n';
    return os.str();
}

std::string table3_csv(const std::vector<TableRow>& rows) {
    std::ostringstream os;
    os << "method,m,beta,L,mu,alpha,computed_rho,published_rho,abs_diff,tolerance,status,companion_discrepancy,"
          "real_part_rho\n";
    for (const auto& r : rows)
        os << r.method << ',' << r.m << ',' << fmt(r.beta) << ',' << fmt(r.L) << ',' << fmt(r.mu) << ','
           << fmt(r.alpha) << ',' << fmt(r.computed) << ',' << fmt(r.published) << ',' << fmt(r.abs_diff()) << ','
           << fmt(r.tolerance) << ',' << to_string(r.status) << ',' << fmt(r.companion_discrepancy) << ','
           << fmt(r.real_part) << '\n';
    return os.str();
}

bool all_rows_accepted(const std::vector<TableRow>& rows) {
    for (const auto& r : rows)
        if (r.status == TableStatus::fail) return false;
    return true;
}

}  // namespace proxflow
