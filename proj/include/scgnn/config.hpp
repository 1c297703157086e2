#pragma once

#include "scgnn/common.hpp"
#include "scgnn/csv.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace scgnn {

/// Flat `key = value` configuration with `#` comments. Lookup precedence is
/// handled by the caller: CLI flags override file entries which override
/// compiled defaults.
class Config {
 public:
  Config() = default;

  static Config from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("missing or unreadable config file: " + path);
    Config c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      const std::string t = csv::trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw DataError(path + ":" + std::to_string(lineno) +
                        ": expected 'key = value'");
      c.set(csv::trim(t.substr(0, eq)), csv::trim(t.substr(eq + 1)));
    }
    return c;
  }

  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get(const std::string& key, const std::string& fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback
                               : csv::to_double(it->second, "config key " + key);
  }

  long get_long(const std::string& key, long fallback) const {
    const auto it = values_.find(key);
    return it == values_.end() ? fallback
                               : csv::to_long(it->second, "config key " + key);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw DataError("config key " + key + ": expected a boolean, got '" + v + "'");
  }

  std::vector<std::string> get_list(const std::string& key,
                                    const std::string& fallback) const {
    return csv::split_line(get(key, fallback));
  }

  std::vector<long> get_long_list(const std::string& key,
                                  const std::string& fallback) const {
    std::vector<long> out;
    for (const auto& s : get_list(key, fallback))
      out.push_back(csv::to_long(s, "config key " + key));
    return out;
  }

  /// Merge `other` on top of this one (other wins).
  void overlay(const Config& other) {
    for (const auto& [k, v] : other.values_) values_[k] = v;
  }

  /// Canonical text form: sorted keys, one per line.
  std::string serialize() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << " = " << v << "\n";
    return os.str();
  }

  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace scgnn
