#pragma once

#include "mgtwr/types.hpp"

#include <map>
#include <string>
#include <vector>

namespace mgtwr {

/// Numeric CSV with a header row. Cells must parse as doubles; parse errors
/// name the offending row and column.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<Eigen::VectorXd> columns;

  std::size_t rows() const { return columns.empty() ? 0 : static_cast<std::size_t>(columns[0].size()); }
  std::size_t cols() const { return header.size(); }
  /// Column by name; throws SchemaError when absent.
  const Eigen::VectorXd& column(const std::string& name) const;
  bool has(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

/// Writes a table with round-trip exact doubles ("%.17g").
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<Eigen::VectorXd>& columns);

std::string format_double(double v);

/// Assembles a Dataset from named CSV columns. The intercept column is
/// prepended automatically.
Dataset dataset_from_csv(const CsvTable& table, const std::string& u_col,
                         const std::string& v_col, const std::string& t_col,
                         const std::string& y_col, const std::vector<std::string>& covariates);

}  // namespace mgtwr
