#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "refl/matrix.hpp"

namespace refl {

// Comma-separated values with '.' decimals, UTF-8, LF line endings. Lines
// starting with '#' are comments; the first non-comment line is the header.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t col(const std::string& name) const; // throws on miss
    std::vector<double> column(std::size_t j) const;
    Matrix to_matrix() const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

std::string format_double(double v, int significant = 12);

// One '#'-prefixed provenance line, the header, then the rows.
void write_csv(std::ostream& out, const std::string& provenance,
               std::span<const std::string> header,
               const std::vector<std::vector<double>>& rows,
               int significant = 12);

std::string csv_to_string(const std::string& provenance,
                          std::span<const std::string> header,
                          const std::vector<std::vector<double>>& rows,
                          int significant = 12);

void write_text_file(const std::string& path, const std::string& content);

} // namespace refl
