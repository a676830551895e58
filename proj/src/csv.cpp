#include "deco/csv.hpp"
#include "deco/errors.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

namespace deco::csv {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) out.push_back(trim(cur));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

} // namespace

std::string format_value(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char full[40];
  std::snprintf(full, sizeof full, "%.12g", v);
  const double target = std::strtod(full, nullptr);
  for (int p = 1; p < 12; ++p) {
    char s[40];
    std::snprintf(s, sizeof s, "%.*g", p, v);
    if (std::strtod(s, nullptr) == target) return s;
  }
  return full;
}

Writer::Writer(std::ostream& os, const std::vector<std::string>& columns)
    : os_(os), ncols_(columns.size()) {
  require(ncols_ > 0, ErrorKind::invalid_input, "csv: no columns");
  for (std::size_t i = 0; i < columns.size(); ++i)
    os_ << (i ? "," : "") << columns[i];
  os_ << "\n";
}

void Writer::row(const std::vector<double>& values) {
  require(values.size() == ncols_, ErrorKind::invalid_input,
          "csv: row arity does not match the header");
  for (std::size_t i = 0; i < values.size(); ++i)
    os_ << (i ? "," : "") << format_value(values[i]);
  os_ << "\n";
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  fail(ErrorKind::invalid_input, "csv: missing required column '" + name + "'");
}

Table read_table(std::istream& is) {
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    auto fields = split_fields(stripped);
    if (t.columns.empty()) {
      t.columns = fields;
      continue;
    }
    require(fields.size() == t.columns.size(), ErrorKind::invalid_input,
            "csv: line " + std::to_string(lineno) + " has " +
                std::to_string(fields.size()) + " fields, expected " +
                std::to_string(t.columns.size()));
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const char* begin = fields[i].c_str();
      char* end = nullptr;
      row[i] = std::strtod(begin, &end);
      require(end != begin && *end == '\0', ErrorKind::invalid_input,
              "csv: non-numeric field '" + fields[i] + "' on line " +
                  std::to_string(lineno));
    }
    t.rows.push_back(std::move(row));
  }
  require(!t.columns.empty(), ErrorKind::invalid_input, "csv: empty input");
  return t;
}

Table read_table_file(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), ErrorKind::invalid_input,
          "csv: cannot open '" + path + "'");
  return read_table(is);
}

void write_table_file(const std::string& path, const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream os(path);
  require(static_cast<bool>(os), ErrorKind::invalid_input,
          "csv: cannot open '" + path + "' for writing");
  Writer w(os, columns);
  for (const auto& r : rows) w.row(r);
  require(static_cast<bool>(os), ErrorKind::numerical_failure,
          "csv: write to '" + path + "' failed");
}

} // namespace deco::csv
