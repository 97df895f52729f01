#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "lowcon/error.hpp"
#include "lowcon/harness.hpp"

namespace lowcon::harness {
namespace {

// Splits one CSV record; handles double-quoted fields with "" escapes.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_number(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string stem(const std::string& path) {
  const auto slash = path.find_last_of('/');
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  const auto dot = base.find_last_of('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

}  // namespace

Dataset ingest_csv(const std::string& path, const std::string& response_column,
                   const std::vector<std::string>& predictor_columns) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::FileNotFound, "cannot open " + path);
  if (predictor_columns.empty()) throw Error(ErrorKind::ConfigError, "no predictor columns given");

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::EmptyAfterFiltering, path + " is empty");
  std::map<std::string, std::size_t> position;
  const auto header = split_record(line);
  for (std::size_t k = 0; k < header.size(); ++k) position.emplace(trim(header[k]), k);

  auto column = [&](const std::string& name) {
    const auto it = position.find(name);
    if (it == position.end()) throw Error(ErrorKind::ColumnMissing, "column '" + name + "' not in " + path);
    return it->second;
  };
  std::vector<std::size_t> wanted;
  for (const auto& name : predictor_columns) wanted.push_back(column(name));
  const bool with_y = !response_column.empty();
  if (with_y) wanted.push_back(column(response_column));

  std::vector<std::vector<double>> rows;
  Index dropped = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty() || line == "\r") continue;
    const auto fields = split_record(line);
    std::vector<double> values;
    values.reserve(wanted.size());
    for (std::size_t k : wanted) {
      std::optional<double> v = k < fields.size() ? parse_number(fields[k]) : std::nullopt;
      if (!v) break;
      values.push_back(*v);
    }
    if (values.size() != wanted.size()) {
      ++dropped;
      continue;
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw Error(ErrorKind::EmptyAfterFiltering, "no complete rows in " + path);

  Dataset data;
  data.name = stem(path);
  data.column_names = predictor_columns;
  data.dropped_rows = dropped;
  const auto n = static_cast<Index>(rows.size());
  const auto p = static_cast<Index>(predictor_columns.size());
  data.x_raw.resize(n, p);
  if (with_y) data.y = Vector(n);
  for (Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    for (Index j = 0; j < p; ++j) data.x_raw(i, j) = row[static_cast<std::size_t>(j)];
    if (with_y) (*data.y)(i) = row.back();
  }
  return data;
}

void write_dataset_csv(const Dataset& data, const std::string& response_column, std::ostream& out) {
  auto number = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  for (std::size_t j = 0; j < data.column_names.size(); ++j) out << (j ? "," : "") << data.column_names[j];
  if (data.y) out << ',' << response_column;
  out << '\n';
  for (Index i = 0; i < data.x_raw.rows(); ++i) {
    for (Index j = 0; j < data.x_raw.cols(); ++j) out << (j ? "," : "") << number(data.x_raw(i, j));
    if (data.y) out << ',' << number((*data.y)(i));
    out << '\n';
  }
}

}  // namespace lowcon::harness
