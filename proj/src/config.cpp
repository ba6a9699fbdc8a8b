#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace protoforge {

KvConfig KvConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  KvConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError(strfmt("%s:%d: expected key=value", path.c_str(), line_no));
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(strfmt("%s:%d: empty key", path.c_str(), line_no));
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

void KvConfig::set_pair(const std::string& pair) {
  size_t eq = pair.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like key=value, got `" + pair + "`");
  values_[trim(pair.substr(0, eq))] = trim(pair.substr(eq + 1));
}

std::string KvConfig::get_str(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

std::string KvConfig::require_str(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end() || it->second.empty())
    throw ConfigError("missing required config key `" + key + "`");
  return it->second;
}

int KvConfig::get_int(const std::string& key, int fallback) const {
  auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) return fallback;
  char* end = nullptr;
  long v = std::strtol(it->second.c_str(), &end, 10);
  if (end == it->second.c_str() || *end != '\0')
    throw ConfigError("config key `" + key + "` is not an integer: " + it->second);
  return static_cast<int>(v);
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) return fallback;
  char* end = nullptr;
  double v = std::strtod(it->second.c_str(), &end);
  if (end == it->second.c_str() || *end != '\0')
    throw ConfigError("config key `" + key + "` is not a number: " + it->second);
  return v;
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) return fallback;
  const std::string& v = it->second;
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError("config key `" + key + "` is not a boolean: " + v);
}

uint64_t KvConfig::get_u64(const std::string& key, uint64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) return fallback;
  char* end = nullptr;
  unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
  if (end == it->second.c_str() || *end != '\0')
    throw ConfigError("config key `" + key + "` is not an unsigned integer: " + it->second);
  return static_cast<uint64_t>(v);
}

std::optional<double> KvConfig::get_opt_double(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end() || it->second.empty()) return std::nullopt;
  return get_double(key, 0.0);
}

void KvConfig::merge(const KvConfig& overrides) {
  for (const auto& [k, v] : overrides.values_) values_[k] = v;
}

std::string KvConfig::dump() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << '=' << v << "\n";
  return os.str();
}

}  // namespace protoforge
