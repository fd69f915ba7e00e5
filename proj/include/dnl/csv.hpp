#pragma once

#include <string>
#include <vector>

namespace dnl {

// Round-trip safe formatting for doubles ("%.17g").
std::string format_g17(double x);

class CsvWriter {
  public:
    explicit CsvWriter(std::vector<std::string> columns);

    void add_row(const std::vector<double>& values);
    void add_row_mixed(const std::vector<std::string>& cells);

    std::string str() const;
    void write_file(const std::string& path) const;

  private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

} // namespace dnl
