#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace magic {

// One estimation sample: outcome y, exposure d and the n x p matrix of
// candidate instruments z. Instruments are stored as reals; binary coding is
// only checked when asked for.
struct Dataset {
    Eigen::VectorXd y;
    Eigen::VectorXd d;
    Eigen::MatrixXd z;
    std::vector<std::string> instrument_names;

    std::size_t n() const { return static_cast<std::size_t>(y.size()); }
    std::size_t p() const { return static_cast<std::size_t>(z.cols()); }
};

struct Violation {
    std::string code;     // e.g. "constant instrument", "non-finite value"
    std::string column;   // column label, empty when not column specific
    long row = -1;        // 0-based row, -1 when not row specific
    std::string message;
};

using ValidationReport = std::vector<Violation>;

ValidationReport validate(const Dataset& ds, bool strict_binary = false);

// Throws a data error describing the first violation, if any.
void require_valid(const Dataset& ds, bool strict_binary = false);

std::string column_label(const Dataset& ds, std::size_t j);

struct CsvBinding {
    std::string outcome;
    std::string exposure;
    std::vector<std::string> instruments;
};

// Trimmed, unquoted header names.
std::vector<std::string> read_csv_header(const std::string& path);

// Comma separated, header row, '.' decimal point, unquoted numeric fields.
// Columns are bound by header name only.
Dataset load_csv(const std::string& path, const CsvBinding& binding,
                 bool strict_binary = false);

// Writes y,d,<instrument names> with shortest round-trip number formatting.
void write_csv(const Dataset& ds, const std::string& path,
               const std::string& outcome_name = "y",
               const std::string& exposure_name = "d");

}  // namespace magic
