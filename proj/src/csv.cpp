#include "refl/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "refl/errors.hpp"

namespace refl {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // trim surrounding whitespace
        const auto a = cell.find_first_not_of(" \t\r");
        const auto b = cell.find_last_not_of(" \t\r");
        cells.push_back(a == std::string::npos
                            ? std::string()
                            : cell.substr(a, b - a + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

} // namespace

std::size_t CsvTable::col(const std::string& name) const {
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == name) return j;
    throw BadSpec("missing CSV column '" + name + "'");
}

std::vector<double> CsvTable::column(std::size_t j) const {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        if (j >= r.size()) throw ShapeMismatch("ragged CSV row");
        out.push_back(r[j]);
    }
    return out;
}

Matrix CsvTable::to_matrix() const {
    Matrix m(rows.size(), header.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != header.size())
            throw ShapeMismatch("ragged CSV row");
        for (std::size_t j = 0; j < header.size(); ++j)
            m(i, j) = rows[i][j];
    }
    return m;
}

CsvTable read_csv(std::istream& in) {
    CsvTable t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto cells = split_line(line);
        if (!have_header) {
            t.header = cells;
            have_header = true;
            continue;
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            try {
                std::size_t pos = 0;
                const double v = std::stod(c, &pos);
                if (pos != c.size())
                    throw BadSpec("non-numeric CSV cell '" + c + "'");
                row.push_back(v);
            } catch (const std::invalid_argument&) {
                throw BadSpec("non-numeric CSV cell '" + c + "'");
            }
        }
        t.rows.push_back(std::move(row));
    }
    if (!have_header) throw EmptyInput("CSV input has no header row");
    return t;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw BadSpec("cannot open '" + path + "'");
    return read_csv(in);
}

std::string format_double(double v, int significant) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", significant, v);
    return buf;
}

void write_csv(std::ostream& out, const std::string& provenance,
               std::span<const std::string> header,
               const std::vector<std::vector<double>>& rows,
               int significant) {
    out << "# " << provenance << "\n";
    for (std::size_t j = 0; j < header.size(); ++j)
        out << header[j] << (j + 1 < header.size() ? "," : "");
    out << "\n";
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < r.size(); ++j)
            out << format_double(r[j], significant)
                << (j + 1 < r.size() ? "," : "");
        out << "\n";
    }
}

std::string csv_to_string(const std::string& provenance,
                          std::span<const std::string> header,
                          const std::vector<std::vector<double>>& rows,
                          int significant) {
    std::ostringstream out;
    write_csv(out, provenance, header, rows, significant);
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw BadSpec("cannot write '" + path + "'");
    out << content;
}

} // namespace refl
