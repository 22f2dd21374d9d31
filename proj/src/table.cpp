#include "semiglobal/table.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "semiglobal/errors.hpp"

namespace semiglobal {

void Table::add_row(std::vector<double> row) {
  if (row.size() != columns.size())
    throw SpecError("Table: row width " + std::to_string(row.size()) +
                    " != column count " + std::to_string(columns.size()));
  rows.push_back(std::move(row));
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (c) out += ',';
    out += table.columns[c];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += format_number(row[c]);
    }
    out += '\n';
  }
  return out;
}

void emit_csv(const Table& table, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw SolverError("emit_csv: cannot open '" + path + "' for writing");
  f << to_csv(table);
  if (!f) throw SolverError("emit_csv: write to '" + path + "' failed");
}

}  // namespace semiglobal
