#pragma once
// Minimal RFC-4180-style CSV/TSV reading and writing. All exported tables
// are UTF-8 with a mandatory header row; fields are quoted only when needed
// so output is canonical (byte-stable for identical content).

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace itlab::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // Comment lines (leading '#') seen before the header, in order.
  std::vector<std::string> comments;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw std::invalid_argument("csv: no column named '" + name + "'");
  }
  bool has_column(const std::string& name) const {
    for (const auto& h : header)
      if (h == name) return true;
    return false;
  }
};

inline std::string escape_field(const std::string& s, char delim) {
  bool needs_quote = false;
  for (char c : s)
    if (c == delim || c == '"' || c == '\n' || c == '\r') { needs_quote = true; break; }
  if (!needs_quote) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

inline void write_row(std::ostream& os, const std::vector<std::string>& row,
                      char delim = ',') {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) os << delim;
    os << escape_field(row[i], delim);
  }
  os << '\n';
}

inline void write_table(std::ostream& os, const Table& t, char delim = ',') {
  for (const auto& c : t.comments) os << c << '\n';
  write_row(os, t.header, delim);
  for (const auto& r : t.rows) write_row(os, r, delim);
}

inline void write_table_file(const std::string& path, const Table& t,
                             char delim = ',') {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("csv: cannot open for write: " + path);
  write_table(os, t, delim);
}

// Parse one logical CSV record (may span lines when quoted). Returns false at EOF.
inline bool read_record(std::istream& is, std::vector<std::string>& fields,
                        char delim, std::size_t& line_no) {
  fields.clear();
  int ch = is.get();
  if (ch == EOF) return false;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  while (true) {
    if (ch == EOF) {
      fields.push_back(field);
      return true;
    }
    char c = char(ch);
    if (in_quotes) {
      if (c == '"') {
        int nxt = is.peek();
        if (nxt == '"') { field += '"'; is.get(); }
        else in_quotes = false;
      } else {
        if (c == '\n') ++line_no;
        field += c;
      }
    } else if (c == '"' && field.empty() && !any) {
      in_quotes = true;
      any = true;
    } else if (c == delim) {
      fields.push_back(field);
      field.clear();
      any = false;
    } else if (c == '\n') {
      ++line_no;
      if (!field.empty() && field.back() == '\r') field.pop_back();
      fields.push_back(field);
      return true;
    } else {
      field += c;
      any = true;
    }
    ch = is.get();
  }
}

inline Table read_table(std::istream& is, char delim = ',') {
  Table t;
  std::size_t line_no = 1;
  // Skip leading comment lines.
  while (is.peek() == '#') {
    std::string line;
    std::getline(is, line);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    t.comments.push_back(line);
    ++line_no;
  }
  std::vector<std::string> rec;
  if (!read_record(is, rec, delim, line_no))
    throw std::runtime_error("csv: empty input (header row mandatory)");
  t.header = rec;
  while (read_record(is, rec, delim, line_no)) {
    if (rec.size() == 1 && rec[0].empty()) continue;  // blank line
    if (rec.size() != t.header.size())
      throw std::runtime_error("csv: line " + std::to_string(line_no) +
                               ": expected " + std::to_string(t.header.size()) +
                               " fields, got " + std::to_string(rec.size()));
    t.rows.push_back(rec);
  }
  return t;
}

inline Table read_table_file(const std::string& path, char delim = ',') {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("csv: cannot open: " + path);
  return read_table(is, delim);
}

}  // namespace itlab::csv
