#pragma once
// Corpus ingestion and export in three formats:
//   plaintext      — blank-line-separated passages, tokenized on read
//   passage-lines  — one JSON object per line: {id, generation, seed_run, text}
//   token-annotated — CoNLL-U-compatible columns with passage comments
//
// Export is canonical: exporting an ingested corpus and re-ingesting yields
// an identical corpus, and canonical files round-trip byte-identically.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "itlab/corpus.hpp"

namespace itlab {

struct IoError : std::runtime_error {
  std::size_t line;
  IoError(const std::string& msg, std::size_t line_no)
      : std::runtime_error(msg + " (line " + std::to_string(line_no) + ")"),
        line(line_no) {}
};

enum class CorpusFormat { plaintext, passage_lines, token_annotated };

namespace detail {

inline std::string join_tokens(const std::vector<std::string>& toks) {
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out += ' ';
    out += toks[i];
  }
  return out;
}

}  // namespace detail

// --------------------------------------------------------------------------
// plaintext

inline Corpus read_plaintext(std::istream& is, const std::string& id_stem,
                             TokenizerScheme scheme) {
  Corpus c;
  c.origin = CorpusOrigin::ingested;
  std::string line, block;
  std::size_t line_no = 0, first_line = 1;
  int index = 0;
  auto flush = [&] {
    if (block.empty()) return;
    Passage p;
    p.id = id_stem + ":" + std::to_string(index++);
    p.tokens = tokenize(block, scheme);
    if (p.tokens.empty())
      throw IoError("plaintext: passage with no tokens", first_line);
    c.passages.push_back(std::move(p));
    block.clear();
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool blank = line.find_first_not_of(" \t") == std::string::npos;
    if (blank) {
      flush();
    } else {
      if (block.empty()) first_line = line_no;
      if (!block.empty()) block += ' ';
      block += line;
    }
  }
  flush();
  if (c.empty()) throw IoError("plaintext: no passages found", line_no);
  return c;
}

inline void write_plaintext(std::ostream& os, const Corpus& c) {
  for (std::size_t i = 0; i < c.passages.size(); ++i) {
    if (i) os << '\n';
    os << detail::join_tokens(c.passages[i].tokens) << '\n';
  }
}

// --------------------------------------------------------------------------
// passage-lines (JSON lines)

inline Corpus read_passage_lines(std::istream& is) {
  Corpus c;
  c.origin = CorpusOrigin::ingested;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw IoError("passage-lines: malformed JSON record", line_no);
    for (const char* key : {"id", "generation", "seed_run", "text"})
      if (!j.contains(key))
        throw IoError(std::string("passage-lines: missing field '") + key + "'",
                      line_no);
    Passage p;
    try {
      p.id = j.at("id").get<std::string>();
      p.generation = j.at("generation").get<int>();
      p.seed_run = j.at("seed_run").get<int>();
      p.tokens = tokenize(j.at("text").get<std::string>(),
                          TokenizerScheme::whitespace);
    } catch (const nlohmann::json::exception& e) {
      throw IoError(std::string("passage-lines: bad field type: ") + e.what(),
                    line_no);
    }
    if (p.tokens.empty())
      throw IoError("passage-lines: record with empty text", line_no);
    c.passages.push_back(std::move(p));
  }
  if (c.empty()) throw IoError("passage-lines: no records", line_no);
  return c;
}

inline void write_passage_lines(std::ostream& os, const Corpus& c) {
  for (const auto& p : c.passages) {
    nlohmann::json j;
    j["generation"] = p.generation;
    j["id"] = p.id;
    j["seed_run"] = p.seed_run;
    j["text"] = detail::join_tokens(p.tokens);
    os << j.dump() << '\n';  // keys serialized in sorted order: canonical
  }
}

// --------------------------------------------------------------------------
// token-annotated (CoNLL-U-compatible)
//
// Passages open with comment lines:
//   # passage_id = <id>
//   # generation = <int>
//   # seed_run = <int>
// followed by one or more sentence blocks (blank-line separated). Columns:
// ID FORM LEMMA UPOS XPOS FEATS HEAD DEPREL DEPS MISC; unused columns hold _.
// Head indices are sentence-local on disk, passage-local in memory.

inline Corpus read_token_annotated(std::istream& is) {
  Corpus c;
  c.origin = CorpusOrigin::ingested;
  Passage cur;
  bool in_passage = false;
  std::vector<std::string> sent_forms;
  std::vector<TokenAnnotation> sent_annos;
  std::size_t line_no = 0;
  std::size_t expected_id = 1;

  auto flush_sentence = [&](std::size_t at_line) {
    if (sent_forms.empty()) return;
    const std::size_t base = cur.tokens.size();
    for (auto& a : sent_annos) {
      if (a.head < 0 || a.head > int(sent_forms.size()))
        throw IoError("token-annotated: head index out of range", at_line);
      if (a.head > 0) a.head += int(base);  // passage-local
    }
    cur.sentence_spans.emplace_back(base, base + sent_forms.size());
    cur.tokens.insert(cur.tokens.end(), sent_forms.begin(), sent_forms.end());
    cur.annotations.insert(cur.annotations.end(), sent_annos.begin(),
                           sent_annos.end());
    sent_forms.clear();
    sent_annos.clear();
    expected_id = 1;
  };
  auto flush_passage = [&](std::size_t at_line) {
    flush_sentence(at_line);
    if (!in_passage) return;
    if (cur.tokens.empty())
      throw IoError("token-annotated: passage '" + cur.id + "' has no tokens",
                    at_line);
    c.passages.push_back(std::move(cur));
    cur = Passage{};
    in_passage = false;
  };

  std::string line;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush_sentence(line_no);
      continue;
    }
    if (line[0] == '#') {
      auto eq = line.find('=');
      std::string key = line.substr(1, eq == std::string::npos
                                           ? std::string::npos
                                           : eq - 1);
      auto trim = [](std::string s) {
        const auto a = s.find_first_not_of(" \t");
        const auto b = s.find_last_not_of(" \t");
        return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
      };
      key = trim(key);
      std::string val =
          eq == std::string::npos ? std::string{} : trim(line.substr(eq + 1));
      if (key == "passage_id") {
        flush_passage(line_no);
        in_passage = true;
        cur.id = val;
      } else if (key == "generation") {
        cur.generation = std::stoi(val);
      } else if (key == "seed_run") {
        cur.seed_run = std::stoi(val);
      }
      // Unknown comments are permitted and ignored.
      continue;
    }
    if (!in_passage)
      throw IoError("token-annotated: token row before any '# passage_id'",
                    line_no);
    std::vector<std::string> cols;
    {
      std::size_t start = 0;
      while (true) {
        auto tab = line.find('\t', start);
        cols.push_back(line.substr(start, tab == std::string::npos
                                              ? std::string::npos
                                              : tab - start));
        if (tab == std::string::npos) break;
        start = tab + 1;
      }
    }
    if (cols.size() != 10)
      throw IoError("token-annotated: expected 10 tab-separated columns, got " +
                    std::to_string(cols.size()), line_no);
    // Multiword/empty-node ids (1-2, 1.1) are not supported: reject clearly.
    std::size_t id;
    try {
      std::size_t pos = 0;
      id = std::stoul(cols[0], &pos);
      if (pos != cols[0].size()) throw std::invalid_argument("trailing");
    } catch (...) {
      throw IoError("token-annotated: non-integer token id '" + cols[0] + "'",
                    line_no);
    }
    if (id != expected_id)
      throw IoError("token-annotated: token id " + std::to_string(id) +
                    " out of sequence (expected " +
                    std::to_string(expected_id) + ")", line_no);
    ++expected_id;
    TokenAnnotation a;
    a.lemma = cols[2];
    a.upos = cols[3];
    try {
      std::size_t pos = 0;
      a.head = std::stoi(cols[6], &pos);
      if (pos != cols[6].size()) throw std::invalid_argument("trailing");
    } catch (...) {
      throw IoError("token-annotated: non-integer head '" + cols[6] + "'",
                    line_no);
    }
    a.deprel = cols[7];
    sent_forms.push_back(cols[1]);
    sent_annos.push_back(std::move(a));
  }
  flush_passage(line_no);
  if (c.empty()) throw IoError("token-annotated: no passages", line_no);
  return c;
}

inline void write_token_annotated(std::ostream& os, const Corpus& c) {
  for (const auto& p : c.passages) {
    if (p.annotations.size() != p.tokens.size())
      throw std::invalid_argument(
          "write_token_annotated: passage '" + p.id + "' lacks annotations");
    os << "# passage_id = " << p.id << '\n';
    os << "# generation = " << p.generation << '\n';
    os << "# seed_run = " << p.seed_run << '\n';
    const auto spans = sentence_ranges(p);
    for (const auto& [begin, end] : spans) {
      for (std::size_t i = begin; i < end; ++i) {
        const auto& a = p.annotations[i];
        const int local_head = (a.head == 0) ? 0 : a.head - int(begin);
        os << (i - begin + 1) << '\t' << p.tokens[i] << '\t'
           << (a.lemma.empty() ? "_" : a.lemma) << '\t'
           << (a.upos.empty() ? "_" : a.upos) << "\t_\t_\t" << local_head
           << '\t' << (a.deprel.empty() ? "_" : a.deprel) << "\t_\t_\n";
      }
      os << '\n';
    }
  }
}

// --------------------------------------------------------------------------

inline Corpus ingest(const std::string& path, CorpusFormat format,
                     TokenizerScheme scheme = TokenizerScheme::whitespace) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("ingest: cannot open: " + path);
  switch (format) {
    case CorpusFormat::plaintext: {
      const auto stem = std::filesystem::path(path).stem().string();
      return read_plaintext(is, stem, scheme);
    }
    case CorpusFormat::passage_lines:
      return read_passage_lines(is);
    case CorpusFormat::token_annotated:
      return read_token_annotated(is);
  }
  throw std::logic_error("ingest: unknown format");
}

inline void export_corpus(const std::string& path, const Corpus& c,
                          CorpusFormat format) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("export: cannot open for write: " + path);
  switch (format) {
    case CorpusFormat::plaintext: write_plaintext(os, c); return;
    case CorpusFormat::passage_lines: write_passage_lines(os, c); return;
    case CorpusFormat::token_annotated: write_token_annotated(os, c); return;
  }
  throw std::logic_error("export: unknown format");
}

// Atomic persistence: write to a temp file in the same directory, then rename.
inline void export_corpus_atomic(const std::string& path, const Corpus& c,
                                 CorpusFormat format) {
  const std::string tmp = path + ".tmp";
  export_corpus(tmp, c, format);
  std::filesystem::rename(tmp, path);
}

}  // namespace itlab
