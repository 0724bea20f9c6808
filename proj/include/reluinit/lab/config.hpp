#pragma once

// Flat key = value configuration files. `[section]` headers prefix the
// following keys with "section.". Lines starting with '#' or ';' are
// comments. Command-line overrides use the same "key=value" form.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "reluinit/errors.hpp"

namespace reluinit::lab {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ValidationError(what + ": not a number: '" + text + "'");
  return v;
}

inline long long parse_int(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw ValidationError(what + ": not an integer: '" + text + "'");
  return v;
}

class Config {
 public:
  static Config parse(const std::string& text, const std::string& source = "<string>") {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string t = trim(line);
      if (t.empty() || t[0] == '#' || t[0] == ';') continue;
      if (t.front() == '[') {
        if (t.back() != ']') throw ValidationError(source + ":" + std::to_string(lineno) + ": bad section header");
        section = trim(std::string_view(t).substr(1, t.size() - 2));
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos)
        throw ValidationError(source + ":" + std::to_string(lineno) + ": expected key = value");
      std::string key = trim(std::string_view(t).substr(0, eq));
      if (key.empty()) throw ValidationError(source + ":" + std::to_string(lineno) + ": empty key");
      if (!section.empty()) key = section + "." + key;
      cfg.values_[key] = trim(std::string_view(t).substr(eq + 1));
    }
    return cfg;
  }

  static Config from_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ValidationError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str(), path);
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  void apply_override(const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError("override must be key=value: '" + kv + "'");
    set(trim(std::string_view(kv).substr(0, eq)), trim(std::string_view(kv).substr(eq + 1)));
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    used_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  std::string require(const std::string& key) const {
    used_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) throw ValidationError("missing config key '" + key + "'");
    return it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    return has(key) ? parse_double(get_string(key, ""), key) : (used_.insert(key), fallback);
  }

  long long get_int(const std::string& key, long long fallback) const {
    return has(key) ? parse_int(get_string(key, ""), key) : (used_.insert(key), fallback);
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    const std::string t = get_string(key, "");
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
      throw ValidationError(key + ": not an unsigned integer: '" + t + "'");
    return v;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    const std::string v = get_string(key, "");
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ValidationError(key + ": not a boolean: '" + v + "'");
  }

  std::vector<std::string> get_strings(const std::string& key, const std::vector<std::string>& fallback) const {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    std::vector<std::string> out;
    for (auto& s : split(get_string(key, ""), ','))
      if (!s.empty()) out.push_back(s);
    return out;
  }

  // Comma-separated numbers; an item "lo:hi:count" expands to `count`
  // equally spaced points from lo to hi inclusive.
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    std::vector<double> out;
    for (const auto& item : split(get_string(key, ""), ',')) {
      if (item.empty()) continue;
      const auto parts = split(item, ':');
      if (parts.size() == 1) {
        out.push_back(parse_double(item, key));
      } else if (parts.size() == 3) {
        const double lo = parse_double(parts[0], key);
        const double hi = parse_double(parts[1], key);
        const long long n = parse_int(parts[2], key);
        if (n < 1) throw ValidationError(key + ": range count must be positive");
        for (long long i = 0; i < n; ++i)
          out.push_back(n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1));
      } else {
        throw ValidationError(key + ": bad list item '" + item + "'");
      }
    }
    return out;
  }

  std::vector<long long> get_ints(const std::string& key, const std::vector<long long>& fallback) const {
    if (!has(key)) {
      used_.insert(key);
      return fallback;
    }
    std::vector<long long> out;
    for (const auto& item : split(get_string(key, ""), ','))
      if (!item.empty()) out.push_back(parse_int(item, key));
    return out;
  }

  // Keys present in the file but never read.
  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_)
      if (!used_.count(k)) out.push_back(k);
    return out;
  }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace reluinit::lab
