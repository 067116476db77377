#include "sqr/data.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "sqr/errors.hpp"

namespace sqr {

void validate_domain(const DataMatrix& data, FamilyTag tag) {
    for (long i = 0; i < data.n(); ++i)
        for (long j = 0; j < data.p(); ++j)
            if (!in_domain(tag, data.values(i, j)))
                throw DomainViolation("value " + std::to_string(data.values(i, j)) +
                                          " outside the " + family_name(tag) + " domain",
                                      i + 1, j + 1);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_cell(const std::string& cell, long row, long col) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    // allow surrounding whitespace, nothing else
    while (end && *end == ' ') ++end;
    const char* start = begin;
    while (*start == ' ') ++start;
    if (end == begin || start == end || (end && *end != '\0'))
        throw ParseError("cannot parse '" + cell + "' as a number", row, col);
    return v;
}

}  // namespace

DataMatrix load_csv(const std::string& path, FamilyTag tag, bool has_header) {
    std::ifstream in(path);
    if (!in) throw SqrError("cannot open " + path);

    DataMatrix data;
    std::vector<std::vector<double>> rows;
    std::string line;
    long lineno = 0;
    std::size_t width = 0;

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (lineno == 1 && has_header) {
            data.column_names = split_csv_line(line);
            continue;
        }
        const auto cells = split_csv_line(line);
        if (width == 0) width = cells.size();
        if (cells.size() != width)
            throw ParseError("row has " + std::to_string(cells.size()) + " cells, expected " +
                                 std::to_string(width),
                             lineno);
        std::vector<double> row(width);
        for (std::size_t j = 0; j < width; ++j) {
            if (cells[j].find_first_not_of(' ') == std::string::npos)
                throw ParseError("missing value", lineno, static_cast<long>(j + 1));
            row[j] = parse_cell(cells[j], lineno, static_cast<long>(j + 1));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("no data rows in " + path);
    if (!data.column_names.empty() && data.column_names.size() != width)
        throw ParseError("header has " + std::to_string(data.column_names.size()) +
                             " names for " + std::to_string(width) + " columns",
                         1);

    data.values.resize(static_cast<long>(rows.size()), static_cast<long>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j)
            data.values(static_cast<long>(i), static_cast<long>(j)) = rows[i][j];

    validate_domain(data, tag);
    return data;
}

void save_csv(const DataMatrix& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw SqrError("cannot open " + path + " for writing");
    if (!data.column_names.empty()) {
        for (std::size_t j = 0; j < data.column_names.size(); ++j)
            out << (j ? "," : "") << data.column_names[j];
        out << "\n";
    }
    char buf[40];
    for (long i = 0; i < data.n(); ++i) {
        for (long j = 0; j < data.p(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", data.values(i, j));
            out << (j ? "," : "") << buf;
        }
        out << "\n";
    }
    if (!out) throw SqrError("failed writing " + path);
}

}  // namespace sqr
