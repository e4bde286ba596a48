#pragma once

#include <string>
#include <vector>

#include "proxflow/spectral.hpp"

namespace proxflow {

enum class TableStatus {
    pass,    // within tolerance of the published value
    escape,  // outside tolerance, but the companion model matches the real iteration
    fail,
};
std::string_view to_string(TableStatus s);

/// One published entry of the step-size (table2.csv) or optimal-rate (table3.csv) tables, next to our value.
struct TableRow {
    int table = 2;
    std::string method;  // PPM, BDF2, BDF3
    int order = 1;
    int m = 4;
    double beta = 1.0;
    double L = 2.0;
    double mu = 1.0;
    double alpha = 0.0;     // stability edge (table2.csv) or minimiser (table3.csv)
    double computed = 0.0;  // alpha edge (table2.csv) or rho (table3.csv)
    double published = 0.0;
    double tolerance = 0.0;
    double companion_discrepancy = 0.0;  // relative, from simulate_companion_check
    bool companion_passed = false;
    double real_part = 0.0;  // table3.csv only: rho minimised over the largest real part
    TableStatus status = TableStatus::fail;

    double abs_diff() const;
    bool is_ppm() const { return order == 1; }
};

struct TableOptions {
    bool ppm_only = false;
    std::size_t jobs = 1;
    std::size_t companion_steps = 50;
    bool real_part_diagnostic = true;  // table3.csv: also minimise the largest real part
};

std::vector<TableRow> compute_table2(const TableOptions& options = {});
std::vector<TableRow> compute_table3(const TableOptions& options = {});

std::string table2_csv(const std::vector<TableRow>& rows);
std::string table3_csv(const std::vector<TableRow>& rows);

bool all_rows_accepted(const std::vector<TableRow>& rows);

/// Companion check used to vouch for a row: a rotated diagonal quadratic with spectrum
/// spread over [mu, L], 4 dimensions, seeded start.
CompanionCheck table_companion_check(const TableRow& row, std::size_t steps);

}  // namespace proxflow
