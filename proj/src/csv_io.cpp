#include "ge/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

namespace ge::csv {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

bool is_skippable(const std::string& line) {
    const std::string t = trim(line);
    return t.empty() || t.front() == '#';
}

std::string where(const std::string& source, std::size_t line_no) {
    return source + ":" + std::to_string(line_no);
}

}  // namespace

std::string format_double(double value) {
    if (value == 0.0) return "0";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(trim(cell));
            cell.clear();
        } else {
            cell.push_back(ch);
        }
    }
    cells.push_back(trim(cell));
    return cells;
}

double parse_double(const std::string& cell, const std::string& where) {
    if (cell.empty()) {
        throw DataError(where + ": missing value");
    }
    double value = 0.0;
    const char* begin = cell.data();
    const char* end = cell.data() + cell.size();
    if (*begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw DataError(where + ": cannot parse '" + cell + "' as a number");
    }
    if (!std::isfinite(value)) {
        throw DataError(where + ": non-finite value '" + cell + "'");
    }
    return value;
}

ReturnPanel read_panel(std::istream& in, int periods_per_year, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_skippable(line)) continue;
        header = split_line(line);
        break;
    }
    if (header.size() < 2) {
        throw DataError(where(source, line_no) + ": expected header 'date,<asset ids>'");
    }
    std::vector<std::string> ids(header.begin() + 1, header.end());
    for (const auto& id : ids) {
        if (id.empty()) throw DataError(where(source, line_no) + ": empty asset id in header");
    }
    const auto p = static_cast<Index>(ids.size());

    std::vector<std::string> dates;
    std::vector<double> values;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_skippable(line)) continue;
        const auto cells = split_line(line);
        if (static_cast<Index>(cells.size()) != p + 1) {
            throw DataError(where(source, line_no) + ": expected " + std::to_string(p + 1) +
                            " cells, found " + std::to_string(cells.size()));
        }
        dates.push_back(cells[0]);
        for (Index j = 0; j < p; ++j) {
            values.push_back(parse_double(cells[static_cast<std::size_t>(j + 1)],
                                          where(source, line_no)));
        }
    }
    const auto t = static_cast<Index>(dates.size());
    Matrix returns(t, p);
    for (Index r = 0; r < t; ++r) {
        for (Index j = 0; j < p; ++j) {
            returns(r, j) = values[static_cast<std::size_t>(r * p + j)];
        }
    }
    try {
        return ReturnPanel(std::move(returns), std::move(ids), periods_per_year, std::move(dates));
    } catch (const DataError& e) {
        throw DataError(source + ": " + e.what());
    }
}

ReturnPanel read_panel_file(const std::string& path, int periods_per_year) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open panel file '" + path + "'");
    return read_panel(in, periods_per_year, path);
}

void write_panel(std::ostream& out, const ReturnPanel& panel) {
    out << "date";
    for (const auto& id : panel.asset_ids()) out << ',' << id;
    out << '\n';
    const Matrix& r = panel.returns();
    for (Index t = 0; t < r.rows(); ++t) {
        out << panel.dates()[static_cast<std::size_t>(t)];
        for (Index j = 0; j < r.cols(); ++j) out << ',' << format_double(r(t, j));
        out << '\n';
    }
}

LabeledMatrix read_matrix(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_skippable(line)) continue;
        header = split_line(line);
        break;
    }
    if (header.size() < 2) {
        throw DataError(where(source, line_no) + ": expected header 'asset,<asset ids>'");
    }
    LabeledMatrix result;
    result.ids.assign(header.begin() + 1, header.end());
    const auto p = static_cast<Index>(result.ids.size());
    result.values = Matrix::Zero(p, p);
    Index row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_skippable(line)) continue;
        const auto cells = split_line(line);
        if (static_cast<Index>(cells.size()) != p + 1) {
            throw DataError(where(source, line_no) + ": matrix is not square (expected " +
                            std::to_string(p + 1) + " cells, found " +
                            std::to_string(cells.size()) + ")");
        }
        if (row >= p) {
            throw DataError(where(source, line_no) + ": matrix is not square (more than " +
                            std::to_string(p) + " rows)");
        }
        if (cells[0] != result.ids[static_cast<std::size_t>(row)]) {
            throw DataError(where(source, line_no) + ": row label '" + cells[0] +
                            "' does not match column label '" +
                            result.ids[static_cast<std::size_t>(row)] + "'");
        }
        for (Index j = 0; j < p; ++j) {
            result.values(row, j) =
                parse_double(cells[static_cast<std::size_t>(j + 1)], where(source, line_no));
        }
        ++row;
    }
    if (row != p) {
        throw DataError(source + ": matrix is not square (" + std::to_string(row) + " rows, " +
                        std::to_string(p) + " columns)");
    }
    return result;
}

LabeledMatrix read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open matrix file '" + path + "'");
    return read_matrix(in, path);
}

void write_matrix(std::ostream& out, const Matrix& values, const std::vector<std::string>& ids) {
    out << "asset";
    for (const auto& id : ids) out << ',' << id;
    out << '\n';
    for (Index i = 0; i < values.rows(); ++i) {
        out << ids[static_cast<std::size_t>(i)];
        for (Index j = 0; j < values.cols(); ++j) out << ',' << format_double(values(i, j));
        out << '\n';
    }
}

Table read_table(std::istream& in, const std::string& source) {
    Table table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_skippable(line)) continue;
        auto cells = split_line(line);
        if (table.header.empty()) {
            table.header = std::move(cells);
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw DataError(where(source, line_no) + ": expected " +
                            std::to_string(table.header.size()) + " cells, found " +
                            std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    if (table.header.empty()) throw DataError(source + ": empty table");
    return table;
}

void write_weights(std::ostream& out, const AllocationVector& w,
                   const std::vector<std::string>& ids) {
    out << "# gross_exposure=" << format_double(w.gross_exposure()) << '\n';
    out << "# n_long=" << w.n_long() << '\n';
    out << "# n_short=" << w.n_short() << '\n';
    out << "asset,weight\n";
    for (Index i = 0; i < w.size(); ++i) {
        out << ids[static_cast<std::size_t>(i)] << ',' << format_double(w[i]) << '\n';
    }
}

LabeledWeights read_weights(std::istream& in, const std::string& source) {
    const Table table = read_table(in, source);
    if (table.header.size() != 2 || table.header[0] != "asset" || table.header[1] != "weight") {
        throw DataError(source + ": expected header 'asset,weight'");
    }
    Vector w(static_cast<Index>(table.rows.size()));
    std::vector<std::string> ids;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        ids.push_back(table.rows[r][0]);
        w[static_cast<Index>(r)] = parse_double(table.rows[r][1], source);
    }
    return LabeledWeights{AllocationVector(std::move(w)), std::move(ids)};
}

}  // namespace ge::csv
