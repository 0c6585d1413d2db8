#include "fisherlab/table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "fisherlab/errors.hpp"

namespace fisherlab {

namespace {

// Orders cells of possibly different alternatives: numbers before text,
// numbers compared by value.
bool cell_less(const Cell& a, const Cell& b) {
  auto as_number = [](const Cell& c, double& out) {
    if (const double* d = std::get_if<double>(&c)) {
      out = *d;
      return true;
    }
    if (const auto* i = std::get_if<std::int64_t>(&c)) {
      out = static_cast<double>(*i);
      return true;
    }
    return false;
  };
  double x = 0.0;
  double y = 0.0;
  const bool nx = as_number(a, x);
  const bool ny = as_number(b, y);
  if (nx && ny) {
    if (std::isnan(x) || std::isnan(y)) return !std::isnan(x) && std::isnan(y);
    return x < y;
  }
  if (nx != ny) return nx;
  return std::get<std::string>(a) < std::get<std::string>(b);
}

std::string header_value(const std::string& line, const std::string& key) {
  const std::string tag = key + "=";
  const auto pos = line.find(tag);
  if (pos == std::string::npos) return {};
  const auto end = line.find(' ', pos);
  return line.substr(pos + tag.size(), end == std::string::npos ? end : end - pos - tag.size());
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

Cell parse_cell(const std::string& s) {
  if (s == "NA") return std::numeric_limits<double>::quiet_NaN();
  char* end = nullptr;
  if (!s.empty() && s.find_first_of(".eEnN") == std::string::npos) {
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end && *end == '\0') return static_cast<std::int64_t>(v);
  }
  const double d = std::strtod(s.c_str(), &end);
  if (!s.empty() && end && *end == '\0') return d;
  return s;
}

}  // namespace

std::string format_cell(const Cell& c) {
  if (const double* d = std::get_if<double>(&c)) {
    if (std::isnan(*d)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", *d);
    return buf;
  }
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return std::get<std::string>(c);
}

Table::Table(std::string experiment, std::string name, std::vector<std::string> columns,
             std::size_t key_columns, int schema)
    : experiment_(std::move(experiment)),
      name_(std::move(name)),
      columns_(std::move(columns)),
      keys_(key_columns),
      schema_(schema) {
  if (keys_ > columns_.size()) throw InvalidInput("more key columns than columns");
}

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size())
    throw InvalidInput("row has " + std::to_string(row.size()) + " cells, table '" + name_ +
                       "' has " + std::to_string(columns_.size()) + " columns");
  rows_.push_back(std::move(row));
}

void Table::sort() {
  std::stable_sort(rows_.begin(), rows_.end(), [&](const auto& a, const auto& b) {
    for (std::size_t k = 0; k < keys_; ++k) {
      if (cell_less(a[k], b[k])) return true;
      if (cell_less(b[k], a[k])) return false;
    }
    return false;
  });
}

std::size_t Table::column_index(const std::string& name) const {
  const auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) throw InvalidInput("table '" + name_ + "' has no column '" + name + "'");
  return static_cast<std::size_t>(it - columns_.begin());
}

std::vector<double> Table::numeric_column(const std::string& name) const {
  const std::size_t j = column_index(name);
  std::vector<double> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) {
    if (const double* d = std::get_if<double>(&r[j]))
      out.push_back(*d);
    else if (const auto* i = std::get_if<std::int64_t>(&r[j]))
      out.push_back(static_cast<double>(*i));
    else
      out.push_back(std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

void Table::write_csv(std::ostream& os) const {
  os << "# fisherlab experiment=" << experiment_ << " table=" << name_ << " schema=" << schema_
     << '\n';
  for (std::size_t j = 0; j < columns_.size(); ++j) os << (j ? "," : "") << columns_[j];
  os << '\n';
  for (const auto& r : rows_) {
    for (std::size_t j = 0; j < r.size(); ++j) os << (j ? "," : "") << format_cell(r[j]);
    os << '\n';
  }
}

std::string Table::to_csv() const {
  std::ostringstream os;
  write_csv(os);
  return os.str();
}

void Table::write_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot open '" + path.string() + "' for writing");
  write_csv(out);
  if (!out) throw InvalidInput("failed writing '" + path.string() + "'");
}

Table Table::read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# fisherlab", 0) != 0)
    throw InvalidInput("missing '# fisherlab' header comment");
  Table t;
  t.experiment_ = header_value(line, "experiment");
  t.name_ = header_value(line, "table");
  const std::string schema = header_value(line, "schema");
  t.schema_ = schema.empty() ? 1 : std::stoi(schema);
  if (!std::getline(is, line)) throw InvalidInput("missing column header row");
  t.columns_ = split_commas(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    std::vector<Cell> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_cell(c));
    t.add_row(std::move(row));
  }
  return t;
}

Table Table::read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
  return read_csv(in);
}

}  // namespace fisherlab
