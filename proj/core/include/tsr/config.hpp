#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tsr {

/// Flat `key = value` settings. Accepts the TOML subset used by the config
/// files: `#` comments, `[section]` headers that prefix keys with `section.`,
/// quoted strings, numbers, booleans, and flat numeric arrays.
class Config {
 public:
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, std::string value);
  void set_int(const std::string& key, long long value) { set(key, std::to_string(value)); }
  /// Shortest text that parses back to the same double.
  void set_double(const std::string& key, double value);
  void set_bool(const std::string& key, bool value) { set(key, value ? "true" : "false"); }
  bool has(const std::string& key) const { return values_.contains(key); }
  std::vector<std::string> keys() const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<long long> get_int_list(const std::string& key, const std::vector<long long>& fallback) const;

  /// Sorted `key = value` lines; parse(to_text()) round-trips.
  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace tsr
