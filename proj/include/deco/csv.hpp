#pragma once
// Deterministic numeric CSV reading/writing shared by the CLI and tests.

#include <iosfwd>
#include <string>
#include <vector>

namespace deco::csv {

// Shortest decimal rendering (at most 12 significant digits) that parses back
// to the same 12-digit value.  Byte-deterministic across runs and platforms
// using IEEE doubles.
std::string format_value(double v);

class Writer {
public:
  Writer(std::ostream& os, const std::vector<std::string>& columns);
  void row(const std::vector<double>& values);

private:
  std::ostream& os_;
  std::size_t ncols_;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const; // throws if absent
};

Table read_table(std::istream& is);
Table read_table_file(const std::string& path);

void write_table_file(const std::string& path, const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows);

} // namespace deco::csv
