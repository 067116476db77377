#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "sqr/family.hpp"

namespace sqr {

/// n x p observation matrix, rows = instances. Values are validated
/// against a family domain at load time (or explicitly via
/// validate_domain); missing cells are a load error, not a NaN.
struct DataMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> column_names;  // empty when the file had no header

    long n() const { return values.rows(); }
    long p() const { return values.cols(); }
};

/// Throws DomainViolation (with 1-based row/col) at the first entry
/// outside the family domain.
void validate_domain(const DataMatrix& data, FamilyTag tag);

/// Parses comma-separated decimal values, one instance per row. Rows must
/// be rectangular; empty cells raise ParseError. Domain is validated for
/// the given family.
DataMatrix load_csv(const std::string& path, FamilyTag tag, bool has_header = false);

/// Writes values with 17 significant digits (round-trips doubles exactly).
/// A header line is emitted when column names are present.
void save_csv(const DataMatrix& data, const std::string& path);

}  // namespace sqr
