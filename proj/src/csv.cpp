#include "dnl/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace dnl {

std::string format_g17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

namespace {

std::string quote_if_needed(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

} // namespace

CsvWriter::CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvWriter::add_row(const std::vector<double>& values) {
    if (values.size() != columns_.size())
        throw std::invalid_argument("CsvWriter: row width mismatch");
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_g17(v));
    rows_.push_back(std::move(cells));
}

void CsvWriter::add_row_mixed(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size())
        throw std::invalid_argument("CsvWriter: row width mismatch");
    rows_.push_back(cells);
}

std::string CsvWriter::str() const {
    std::string out;
    for (size_t i = 0; i < columns_.size(); ++i) {
        if (i) out += ",";
        out += quote_if_needed(columns_[i]);
    }
    out += "\n";
    for (const auto& row : rows_) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out += ",";
            out += quote_if_needed(row[i]);
        }
        out += "\n";
    }
    return out;
}

void CsvWriter::write_file(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("CsvWriter: cannot open " + path);
    f << str();
}

} // namespace dnl
