// Plain-text configuration: "key = value" lines grouped under [section]
// headers (a TOML-compatible subset), '#' or ';' comments. Keys are addressed
// as "section.key"; keys before any section header have no prefix.

#pragma once

#include <map>
#include <stdexcept>
#include <string>

namespace voxloop {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void set_double(const std::string& key, double value);
  void set_int(const std::string& key, long long value);
  void set_bool(const std::string& key, bool value);

  /// Deterministic dump, sections sorted, suitable for effective-config files.
  std::string dump() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace voxloop
