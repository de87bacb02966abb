#include "mgtwr/csv.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mgtwr {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // Trim surrounding whitespace and optional quotes.
    auto b = field.find_first_not_of(" \t\r\"");
    auto e = field.find_last_not_of(" \t\r\"");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

const Eigen::VectorXd& CsvTable::column(const std::string& name) const {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return columns[c];
  throw SchemaError("column '" + name + "' not found in input");
}

bool CsvTable::has(const std::string& name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("'" + path + "' is empty");
  table.header = split_line(line);
  if (table.header.empty()) throw SchemaError("'" + path + "' has an empty header row");

  std::vector<std::vector<double>> cols(table.header.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != table.header.size())
      throw SchemaError(path + ":" + std::to_string(row) + ": expected " +
                        std::to_string(table.header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    for (std::size_t c = 0; c < fields.size(); ++c) {
      char* end = nullptr;
      const double v = std::strtod(fields[c].c_str(), &end);
      if (end == fields[c].c_str() || *end != '\0')
        throw SchemaError(path + ":" + std::to_string(row) + ": column '" + table.header[c] +
                          "' is not numeric ('" + fields[c] + "')");
      cols[c].push_back(v);
    }
  }
  table.columns.resize(cols.size());
  for (std::size_t c = 0; c < cols.size(); ++c)
    table.columns[c] = Eigen::Map<Eigen::VectorXd>(cols[c].data(),
                                                   static_cast<Eigen::Index>(cols[c].size()));
  return table;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<Eigen::VectorXd>& columns) {
  if (header.size() != columns.size())
    throw InvalidInputError("write_csv: header/column count mismatch");
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  const Eigen::Index rows = columns.empty() ? 0 : columns[0].size();
  for (const auto& col : columns)
    if (col.size() != rows) throw InvalidInputError("write_csv: ragged columns");
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c)
      out << (c ? "," : "") << format_double(columns[c][r]);
    out << '\n';
  }
}

Dataset dataset_from_csv(const CsvTable& table, const std::string& u_col, const std::string& v_col,
                         const std::string& t_col, const std::string& y_col,
                         const std::vector<std::string>& covariates) {
  const std::size_t n = table.rows();
  if (n == 0) throw SchemaError("input has no data rows");
  Dataset data;
  data.coords.resize(n, 2);
  data.coords.col(0) = table.column(u_col);
  data.coords.col(1) = table.column(v_col);
  data.times = table.column(t_col);
  data.y = table.column(y_col);
  data.X.resize(n, static_cast<Eigen::Index>(covariates.size() + 1));
  data.X.col(0).setOnes();
  data.covariate_names.clear();
  data.covariate_names.push_back("intercept");
  for (std::size_t c = 0; c < covariates.size(); ++c) {
    data.X.col(static_cast<Eigen::Index>(c + 1)) = table.column(covariates[c]);
    data.covariate_names.push_back(covariates[c]);
  }

  // Re-raise validation problems as schema errors with column context.
  try {
    data.validate();
  } catch (const InvalidInputError& e) {
    throw SchemaError(e.what());
  }
  return data;
}

}  // namespace mgtwr
