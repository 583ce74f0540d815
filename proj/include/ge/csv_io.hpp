#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ge/core.hpp"

namespace ge::csv {

/// Shortest text that round-trips the double exactly ("%.17g").
std::string format_double(double value);

/**
 * Return panel CSV: header `date,<id_1>,...,<id_p>`, one row per period,
 * returns as decimal fractions. Empty or unparsable cells are rejected.
 * `source` is only used to prefix error messages ("file:line: ...").
 */
ReturnPanel read_panel(std::istream& in, int periods_per_year = kDefaultPeriodsPerYear,
                       const std::string& source = "<panel>");
ReturnPanel read_panel_file(const std::string& path,
                            int periods_per_year = kDefaultPeriodsPerYear);
void write_panel(std::ostream& out, const ReturnPanel& panel);

struct LabeledMatrix {
    Matrix values;
    std::vector<std::string> ids;
};

/// Square matrix with header `asset,<id_1>,...,<id_p>` and rows `<id_i>,v_i1,...`.
LabeledMatrix read_matrix(std::istream& in, const std::string& source = "<matrix>");
LabeledMatrix read_matrix_file(const std::string& path);
void write_matrix(std::ostream& out, const Matrix& values, const std::vector<std::string>& ids);

/// Generic rectangular numeric table with a header row (used for equality constraints).
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
Table read_table(std::istream& in, const std::string& source = "<table>");

struct LabeledWeights {
    AllocationVector weights;
    std::vector<std::string> ids;
};

/// Weights CSV: `# gross_exposure=`, `# n_long=`, `# n_short=` comment lines,
/// then header `asset,weight` and one row per asset.
void write_weights(std::ostream& out, const AllocationVector& w,
                   const std::vector<std::string>& ids);
LabeledWeights read_weights(std::istream& in, const std::string& source = "<weights>");

std::vector<std::string> split_line(const std::string& line);
double parse_double(const std::string& cell, const std::string& where);

}  // namespace ge::csv
