#pragma once

#include <map>
#include <optional>
#include <string>

#include "common.hpp"

namespace protoforge {

/// Flat key=value configuration with section-prefixed keys
/// (encoder.d_h=230). `#` starts a comment; blank lines are ignored.
class KvConfig {
 public:
  KvConfig() = default;

  static KvConfig from_file(const std::string& path);

  /// Parses a single `key=value` string (the CLI --set form).
  void set_pair(const std::string& pair);
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void erase(const std::string& key) { values_.erase(key); }

  std::string get_str(const std::string& key, const std::string& fallback) const;
  std::string require_str(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;
  std::optional<double> get_opt_double(const std::string& key) const;

  /// Later entries win.
  void merge(const KvConfig& overrides);

  std::string dump() const;  // sorted key=value lines
  const std::map<std::string, std::string>& entries() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace protoforge
