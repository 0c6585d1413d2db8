#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace fisherlab {

/// A cell is a real (NaN is written as NA), an integer, or text.
using Cell = std::variant<double, std::int64_t, std::string>;

/// Result table written as CSV:
///   # fisherlab experiment=<id> table=<name> schema=<version>
///   col1,col2,...
///   rows, sorted by the first `key_columns` columns
/// Reals use %.17g so a rerun reproduces the file byte for byte.
class Table {
 public:
  Table() = default;
  Table(std::string experiment, std::string name, std::vector<std::string> columns,
        std::size_t key_columns, int schema = 1);

  const std::string& experiment() const noexcept { return experiment_; }
  const std::string& name() const noexcept { return name_; }
  const std::vector<std::string>& columns() const noexcept { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const noexcept { return rows_; }
  std::size_t key_columns() const noexcept { return keys_; }
  int schema() const noexcept { return schema_; }

  /// Throws InvalidInput when the row width differs from the column count.
  void add_row(std::vector<Cell> row);
  /// Stable sort on the key columns.
  void sort();

  std::size_t column_index(const std::string& name) const;
  /// Column as reals; integers are converted, text and NA become NaN.
  std::vector<double> numeric_column(const std::string& name) const;

  void write_csv(std::ostream& os) const;
  std::string to_csv() const;
  void write_file(const std::filesystem::path& path) const;

  /// Parses the format produced by write_csv. Cells are kept as text unless
  /// they parse as numbers.
  static Table read_csv(std::istream& is);
  static Table read_file(const std::filesystem::path& path);

 private:
  std::string experiment_;
  std::string name_;
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
  std::size_t keys_ = 0;
  int schema_ = 1;
};

std::string format_cell(const Cell& c);

}  // namespace fisherlab
