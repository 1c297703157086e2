#pragma once

#include "scgnn/common.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace scgnn {
namespace csv {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

/// Reads a whole comma-separated file. Field values are opaque strings;
/// identifiers must not contain commas.
class Table {
 public:
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  static Table read(const std::string& path, bool has_header) {
    std::ifstream in(path);
    if (!in) throw DataError("missing or unreadable file: " + path);
    Table t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      auto fields = split_line(line);
      if (first && has_header) {
        t.header = fields;
        first = false;
        continue;
      }
      first = false;
      t.rows.push_back(std::move(fields));
    }
    return t;
  }

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  }

  int require_column(const std::string& name, const std::string& path) const {
    const int c = column(name);
    if (c < 0) throw DataError(path + ": missing column '" + name + "'");
    return c;
  }
};

inline double to_double(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("expected a number in " + context + ", got '" + s + "'");
  }
}

inline long to_long(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("expected an integer in " + context + ", got '" + s + "'");
  }
}

/// Formats with 17 significant digits so doubles survive a text round trip.
inline std::string format(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path) {
    if (!out_) throw DataError("cannot open for writing: " + path);
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out_ << ',';
      out_ << fields[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

}  // namespace csv
}  // namespace scgnn
