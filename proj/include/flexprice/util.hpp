#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace flexprice::util {

// Shortest round-trip decimal form; the single formatter behind every
// numeric artifact so that read + re-emit is byte-identical.
inline std::string fmt_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
}

// Numeric table with named columns, the shape of every emitted trace.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::string to_csv() const {
    std::ostringstream ss;
    for (size_t i = 0; i < columns.size(); ++i) ss << (i ? "," : "") << columns[i];
    ss << "\n";
    for (const auto& row : rows) {
      for (size_t i = 0; i < row.size(); ++i) ss << (i ? "," : "") << fmt_double(row[i]);
      ss << "\n";
    }
    return ss.str();
  }

  static Table from_csv(const std::string& text) {
    Table t;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty csv");
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.columns.push_back(cell);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<double> row;
      std::istringstream rs(line);
      while (std::getline(rs, cell, ',')) {
        double v = 0.0;
        auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (res.ec != std::errc()) throw std::runtime_error("bad csv number: " + cell);
        row.push_back(v);
      }
      if (row.size() != t.columns.size()) throw std::runtime_error("ragged csv row");
      t.rows.push_back(std::move(row));
    }
    return t;
  }
};

inline uint64_t fnv1a(const std::string& bytes) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace flexprice::util
