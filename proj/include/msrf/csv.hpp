#pragma once

// Numeric CSV ingestion and output. Comma separated, header required, '.'
// decimal point, no quoting. Survival files carry `time` and `status` columns;
// every other column is a numeric covariate.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "msrf/survival.hpp"

namespace msrf {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::ptrdiff_t column(std::string_view name) const noexcept {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (header[j] == name) return static_cast<std::ptrdiff_t>(j);
    }
    return -1;
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) noexcept {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace detail

/// Reads a fully numeric CSV. Row numbers in errors are 1-based data rows
/// (the header is not counted) together with the file line.
inline CsvTable read_numeric_csv(std::istream& in, const std::string& source = "input") {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) break;
  }
  if (detail::trim(line).empty()) throw CsvError(source + ": empty file, header row required");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  for (auto f : detail::split_fields(line)) {
    if (f.empty()) throw CsvError(source + ": empty column name in header");
    table.header.emplace_back(f);
  }

  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    ++row_no;
    const auto fields = detail::split_fields(line);
    const std::string where = source + ": row " + std::to_string(row_no) + " (line " + std::to_string(line_no) + ")";
    if (fields.size() != table.header.size()) {
      throw CsvError(where + ": expected " + std::to_string(table.header.size()) + " fields, found " +
                     std::to_string(fields.size()));
    }
    std::vector<double> values(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (!detail::parse_double(fields[j], values[j])) {
        throw CsvError(where + ", column '" + table.header[j] + "': not a finite number: '" + std::string(fields[j]) +
                       "'");
      }
    }
    table.rows.push_back(std::move(values));
  }
  return table;
}

inline CsvTable read_numeric_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path);
  return read_numeric_csv(in, path);
}

/// Builds a survival dataset from a table with `time` and `status` columns.
inline SurvivalDataset to_dataset(const CsvTable& table, const std::string& source = "input") {
  const auto time_col = table.column("time");
  const auto status_col = table.column("status");
  if (time_col < 0) throw CsvError(source + ": missing required column 'time'");
  if (status_col < 0) throw CsvError(source + ": missing required column 'status'");
  if (table.rows.empty()) throw CsvError(source + ": no data rows");

  std::vector<std::size_t> cov_cols;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (static_cast<std::ptrdiff_t>(j) == time_col || static_cast<std::ptrdiff_t>(j) == status_col) continue;
    cov_cols.push_back(j);
    names.push_back(table.header[j]);
  }
  if (cov_cols.empty()) throw CsvError(source + ": no covariate columns");

  const std::size_t n = table.rows.size();
  std::vector<double> times(n);
  std::vector<Status> status(n);
  std::vector<std::vector<double>> cols(cov_cols.size(), std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = table.rows[i];
    const std::string where = source + ": row " + std::to_string(i + 1);
    times[i] = r[static_cast<std::size_t>(time_col)];
    if (!(times[i] > 0.0)) throw CsvError(where + ": time must be positive");
    const double s = r[static_cast<std::size_t>(status_col)];
    if (s != 0.0 && s != 1.0) throw CsvError(where + ": status must be 0 or 1");
    status[i] = static_cast<Status>(s);
    for (std::size_t k = 0; k < cov_cols.size(); ++k) cols[k][i] = r[cov_cols[k]];
  }
  return SurvivalDataset(std::move(times), std::move(status), std::move(cols), std::move(names));
}

inline SurvivalDataset read_dataset_file(const std::string& path) {
  return to_dataset(read_numeric_csv_file(path), path);
}

/// Covariate rows ordered as `names`; extra columns are ignored.
inline std::vector<std::vector<double>> covariate_rows(const CsvTable& table, const std::vector<std::string>& names,
                                                       const std::string& source = "input") {
  std::vector<std::size_t> cols;
  for (const auto& name : names) {
    const auto j = table.column(name);
    if (j < 0) throw CsvError(source + ": missing covariate column '" + name + "' required by the model");
    cols.push_back(static_cast<std::size_t>(j));
  }
  std::vector<std::vector<double>> rows(table.rows.size(), std::vector<double>(cols.size()));
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    for (std::size_t k = 0; k < cols.size(); ++k) rows[i][k] = table.rows[i][cols[k]];
  }
  return rows;
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline void write_dataset(std::ostream& out, const SurvivalDataset& data) {
  out << "time,status";
  for (const auto& name : data.covariate_names()) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << format_double(data.times()[i]) << ',' << static_cast<int>(data.status()[i]);
    for (std::size_t j = 0; j < data.num_covariates(); ++j) out << ',' << format_double(data.value(i, j));
    out << '\n';
  }
}

inline void write_dataset_file(const std::string& path, const SurvivalDataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CsvError("cannot open " + path + " for writing");
  write_dataset(out, data);
}

}  // namespace msrf
