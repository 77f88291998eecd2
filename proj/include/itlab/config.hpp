#pragma once
// Flat dotted-key configuration text. One `key = value` per line, '#' starts
// a comment, blank lines are ignored. Keys are lowercase dotted identifiers;
// values are trimmed free text (possibly empty). The same format serves as
// config file, run-directory snapshot, and override syntax, so experiments
// stay diffable line by line.

#include <cctype>
#include <cstdint>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace itlab::cfg {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline void validate_key(const std::string& key) {
  if (key.empty()) throw std::invalid_argument("config: empty key");
  char prev = '.';
  for (char c : key) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '.';
    if (!ok)
      throw std::invalid_argument("config: bad character in key '" + key +
                                  "'");
    if (c == '.' && prev == '.')
      throw std::invalid_argument("config: malformed dotted key '" + key +
                                  "'");
    prev = c;
  }
  if (key.back() == '.')
    throw std::invalid_argument("config: malformed dotted key '" + key + "'");
}

// Insertion-ordered key/value pairs; duplicate keys are a parse error.
struct FlatConfig {
  std::vector<std::pair<std::string, std::string>> entries;

  const std::string* find(const std::string& key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return &v;
    return nullptr;
  }

  bool has(const std::string& key) const { return find(key) != nullptr; }

  // Replace in place, or append when the key is new.
  void set(const std::string& key, const std::string& value) {
    validate_key(key);
    for (auto& [k, v] : entries)
      if (k == key) {
        v = value;
        return;
      }
    entries.emplace_back(key, value);
  }
};

inline FlatConfig parse_flat_config(const std::string& text) {
  FlatConfig out;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    validate_key(key);
    if (out.has(key))
      throw std::invalid_argument("config line " + std::to_string(line_no) +
                                  ": duplicate key '" + key + "'");
    out.entries.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

inline std::string serialize_flat_config(const FlatConfig& c) {
  std::string out;
  for (const auto& [k, v] : c.entries) {
    out += k;
    out += v.empty() ? " =" : " = " + v;
    out += '\n';
  }
  return out;
}

// Override syntax: "key=value" (first '=' splits).
inline void apply_override(FlatConfig& c, const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("config override '" + spec +
                                "': expected key=value");
  const std::string key = trim(spec.substr(0, eq));
  validate_key(key);
  c.set(key, trim(spec.substr(eq + 1)));
}

inline void reject_unknown_keys(const FlatConfig& c,
                                const std::set<std::string>& allowed) {
  for (const auto& [k, v] : c.entries)
    if (!allowed.count(k))
      throw std::invalid_argument("config: unknown key '" + k + "'");
}

// ------------------------------------------------------------ typed reads ---

inline std::string get_string(const FlatConfig& c, const std::string& key,
                              const std::string& fallback) {
  const std::string* v = c.find(key);
  return v ? *v : fallback;
}

inline std::string require_string(const FlatConfig& c, const std::string& key) {
  const std::string* v = c.find(key);
  if (!v) throw std::invalid_argument("config: missing key '" + key + "'");
  return *v;
}

inline bool get_bool(const FlatConfig& c, const std::string& key,
                     bool fallback) {
  const std::string* v = c.find(key);
  if (!v) return fallback;
  if (*v == "true") return true;
  if (*v == "false") return false;
  throw std::invalid_argument("config: key '" + key +
                              "' wants true/false, got '" + *v + "'");
}

inline std::uint64_t get_u64(const FlatConfig& c, const std::string& key,
                             std::uint64_t fallback) {
  const std::string* v = c.find(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const std::uint64_t parsed = std::stoull(*v, &used);
    if (used != v->size() || (*v)[0] == '-') throw std::invalid_argument("");
    return parsed;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key +
                                "' wants a non-negative integer, got '" + *v +
                                "'");
  }
}

inline double get_double(const FlatConfig& c, const std::string& key,
                         double fallback) {
  const std::string* v = c.find(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double parsed = std::stod(*v, &used);
    if (used != v->size()) throw std::invalid_argument("");
    return parsed;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: key '" + key +
                                "' wants a number, got '" + *v + "'");
  }
}

}  // namespace itlab::cfg
