#pragma once

#include <string>
#include <vector>

namespace semiglobal {

// Rectangular numeric table with named columns; the CSV form renders every
// value with 17 significant digits so rereading reproduces the doubles.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row);
};

std::string to_csv(const Table& table);

void emit_csv(const Table& table, const std::string& path);

std::string format_number(double v);  // %.17g

}  // namespace semiglobal
