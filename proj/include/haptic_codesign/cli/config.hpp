#pragma once

// Flat key=value run configuration. Every command declares its keys up front;
// anything else is rejected. Units are part of the key names.

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace hcd::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KeySpec {
  std::string name;
  std::string default_value;
  std::string help;
};

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

class RunConfig {
 public:
  RunConfig(std::string command, std::vector<KeySpec> schema)
      : command_(std::move(command)), schema_(std::move(schema)) {
    for (const KeySpec& k : schema_) values_[k.name] = k.default_value;
  }

  const std::string& command() const { return command_; }
  const std::vector<KeySpec>& schema() const { return schema_; }

  void set(const std::string& key, const std::string& value) {
    if (!values_.count(key)) {
      throw ConfigError(command_ + "." + key + ": unknown key");
    }
    values_[key] = trim(value);
  }

  /// Reads `key = value` lines; blank lines and lines starting with '#' are skipped.
  void load_stream(std::istream& in, const std::string& origin) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#') continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
      }
      const std::string key = trim(t.substr(0, eq));
      try {
        set(key, t.substr(eq + 1));
      } catch (const ConfigError& e) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    load_stream(in, path);
  }

  const std::string& str(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw std::logic_error("config key not declared: " + key);
    return it->second;
  }

  double num(const std::string& key) const { return parse_double(key, str(key)); }

  std::int64_t integer(const std::string& key) const {
    const std::string& v = str(key);
    std::int64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
      throw ConfigError(path(key) + ": expected an integer, got '" + v + "'");
    }
    return out;
  }

  bool flag(const std::string& key) const {
    const std::string& v = str(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(path(key) + ": expected true or false, got '" + v + "'");
  }

  /// Comma-separated numbers; an item `a:b:step` expands to a <= x <= b.
  std::vector<double> list(const std::string& key) const {
    std::vector<double> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (item.empty()) continue;
      if (item.find(':') == std::string::npos) {
        out.push_back(parse_double(key, item));
        continue;
      }
      std::vector<double> parts;
      std::stringstream rs(item);
      std::string part;
      while (std::getline(rs, part, ':')) parts.push_back(parse_double(key, trim(part)));
      if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0]) {
        throw ConfigError(path(key) + ": range must be start:stop:step with step > 0, got '" + item + "'");
      }
      const auto n = static_cast<std::int64_t>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
      for (std::int64_t i = 0; i <= n; ++i) out.push_back(parts[0] + static_cast<double>(i) * parts[2]);
    }
    return out;
  }

  std::vector<std::string> words(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  std::string choice(const std::string& key, const std::vector<std::string>& allowed) const {
    const std::string& v = str(key);
    if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
      std::string opts;
      for (const auto& a : allowed) opts += (opts.empty() ? "" : "|") + a;
      throw ConfigError(path(key) + ": expected one of " + opts + ", got '" + v + "'");
    }
    return v;
  }

  std::string path(const std::string& key) const { return command_ + "." + key; }

  /// FNV-1a over the command name and every effective key=value pair.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto feed = [&](const std::string& s) {
      for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
      }
    };
    feed(command_);
    feed("\n");
    for (const auto& [k, v] : values_) feed(k + "=" + v + "\n");
    return h;
  }

  std::string hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  double parse_double(const std::string& key, const std::string& v) const {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
      throw ConfigError(path(key) + ": expected a number, got '" + v + "'");
    }
    return out;
  }

  std::string command_;
  std::vector<KeySpec> schema_;
  std::map<std::string, std::string> values_;
};

}  // namespace hcd::cli
