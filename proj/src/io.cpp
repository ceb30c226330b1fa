#include "mdsclt/io.hpp"

#include "mdsclt/error.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

namespace mdsclt {

namespace {

double parse_cell(std::string_view cell, const std::string& path, size_t line) {
  while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
  while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
    throw ValidationError(path + ":" + std::to_string(line) + ": not a number: '" + std::string(cell) + "'");
  return v;
}

} // namespace

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Matrix read_matrix_csv(const std::string& path) {
  std::istringstream in(read_text(path));
  std::vector<std::vector<double>> rows;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    size_t start = 0;
    for (;;) {
      const size_t comma = line.find(',', start);
      row.push_back(parse_cell(std::string_view(line).substr(start, comma - start), path, lineno));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected " + std::to_string(rows.front().size()) +
                            " columns, found " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(path + ": empty matrix");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return m;
}

SymmetricMatrix read_symmetric_csv(const std::string& path) {
  const Matrix m = read_matrix_csv(path);
  if (m.rows() != m.cols())
    throw ValidationError(path + ": expected a square matrix, got " + std::to_string(m.rows()) + " x " +
                          std::to_string(m.cols()));
  try {
    return SymmetricMatrix::from_full(m);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

std::string to_csv(const Matrix& m) {
  std::string out;
  char buf[32];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into " + path);
  }
}

void write_matrix_csv(const std::string& path, const Matrix& m) { write_text_atomic(path, to_csv(m)); }

} // namespace mdsclt
