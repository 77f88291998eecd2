#pragma once
// Core corpus representations: passages, corpora, tokenization, frequency
// tables, quartile decompositions, and Jensen-Shannon divergence.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace itlab {

// Per-token dependency record. Head indices are passage-local, 1-based,
// 0 = sentence root (CoNLL-U convention lifted to the passage level).
struct TokenAnnotation {
  int head = 0;
  std::string deprel;
  std::string upos;
  std::string lemma;
};

struct Passage {
  std::string id;
  int generation = 0;
  int seed_run = 0;
  std::vector<std::string> tokens;
  // Optional per-token dependency records; empty or same size as tokens.
  std::vector<TokenAnnotation> annotations;
  // Sentence boundaries as [begin, end) token ranges. Optional; when empty,
  // consumers derive sentences by splitting after "." tokens.
  std::vector<std::pair<std::size_t, std::size_t>> sentence_spans;
  // Ground-truth per-sentence slot-label sequences, one entry per sentence.
  // Generators fill these; an empty inner vector marks an unparsed sentence.
  std::vector<std::vector<std::string>> sentence_forms;

  bool has_annotations() const { return !annotations.empty(); }
  bool has_templates() const { return !sentence_forms.empty(); }
};

enum class CorpusOrigin { seed_natural, seed_regularized, generated, ingested };

struct Corpus {
  std::vector<Passage> passages;
  CorpusOrigin origin = CorpusOrigin::ingested;

  bool empty() const { return passages.empty(); }
  std::size_t size() const { return passages.size(); }
};

inline void validate_passage(const Passage& p) {
  if (p.tokens.empty())
    throw std::invalid_argument("Passage '" + p.id + "': token count must be >= 1");
  if (!p.annotations.empty() && p.annotations.size() != p.tokens.size())
    throw std::invalid_argument("Passage '" + p.id +
                                "': annotation count != token count");
  for (const auto& a : p.annotations)
    if (a.head < 0 || a.head > int(p.tokens.size()))
      throw std::invalid_argument("Passage '" + p.id + "': head index " +
                                  std::to_string(a.head) + " out of [0, len]");
  if (!p.sentence_forms.empty() && !p.sentence_spans.empty() &&
      p.sentence_forms.size() != p.sentence_spans.size())
    throw std::invalid_argument("Passage '" + p.id +
                                "': sentence_forms count != sentence count");
}

inline void validate_corpus(const Corpus& c) {
  if (c.empty()) throw std::invalid_argument("Corpus: must be non-empty");
  const int gen = c.passages.front().generation;
  for (const auto& p : c.passages) {
    validate_passage(p);
    if (p.generation != gen)
      throw std::invalid_argument(
          "Corpus: passages must share one generation index");
  }
}

// Sentences of a passage: stored spans if present, else split after ".".
inline std::vector<std::pair<std::size_t, std::size_t>> sentence_ranges(
    const Passage& p) {
  if (!p.sentence_spans.empty()) return p.sentence_spans;
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < p.tokens.size(); ++i) {
    if (p.tokens[i] == ".") {
      spans.emplace_back(begin, i + 1);
      begin = i + 1;
    }
  }
  if (begin < p.tokens.size()) spans.emplace_back(begin, p.tokens.size());
  return spans;
}

// ---------------------------------------------------------------------------
// Tokenization

enum class TokenizerScheme { whitespace, unicode_word };

namespace detail {

// Decode one UTF-8 codepoint starting at i; advances i. Invalid bytes decode
// as U+FFFD and advance by one.
inline char32_t decode_utf8(std::string_view s, std::size_t& i) {
  const unsigned char b0 = s[i];
  if (b0 < 0x80) { ++i; return b0; }
  auto cont = [&](std::size_t k) {
    return i + k < s.size() && (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
  };
  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    char32_t cp = (char32_t(b0 & 0x1F) << 6) |
                  (static_cast<unsigned char>(s[i + 1]) & 0x3F);
    i += 2;
    return cp;
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    char32_t cp = (char32_t(b0 & 0x0F) << 12) |
                  (char32_t(static_cast<unsigned char>(s[i + 1]) & 0x3F) << 6) |
                  (static_cast<unsigned char>(s[i + 2]) & 0x3F);
    i += 3;
    return cp;
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    char32_t cp = (char32_t(b0 & 0x07) << 18) |
                  (char32_t(static_cast<unsigned char>(s[i + 1]) & 0x3F) << 12) |
                  (char32_t(static_cast<unsigned char>(s[i + 2]) & 0x3F) << 6) |
                  (static_cast<unsigned char>(s[i + 3]) & 0x3F);
    i += 4;
    return cp;
  }
  ++i;
  return 0xFFFD;
}

// Word codepoints for the unicode_word scheme: letters of common scripts,
// digits, combining marks, and underscore. Coverage is documented in the
// README; this is a range table, not a full Unicode property database.
inline bool is_word_cp(char32_t c) {
  if (c < 0x80)
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
           (c >= '0' && c <= '9') || c == '_';
  static constexpr std::pair<char32_t, char32_t> ranges[] = {
      {0x00C0, 0x00FF},  // Latin-1 letters (excl. × ÷ handled below)
      {0x0100, 0x024F},  // Latin Extended-A/B
      {0x0300, 0x036F},  // combining marks
      {0x0370, 0x03FF},  // Greek
      {0x0400, 0x04FF},  // Cyrillic
      {0x0530, 0x058F},  // Armenian
      {0x0590, 0x05FF},  // Hebrew
      {0x0600, 0x06FF},  // Arabic
      {0x0900, 0x097F},  // Devanagari
      {0x1E00, 0x1EFF},  // Latin Extended Additional
      {0x3040, 0x30FF},  // Hiragana + Katakana
      {0x4E00, 0x9FFF},  // CJK Unified
      {0xAC00, 0xD7AF},  // Hangul
  };
  if (c == 0x00D7 || c == 0x00F7) return false;  // × ÷
  for (auto [lo, hi] : ranges)
    if (c >= lo && c <= hi) return true;
  return false;
}

inline bool is_apostrophe(char32_t c) { return c == 0x27 || c == 0x2019; }

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out += char(cp);
  } else if (cp < 0x800) {
    out += char(0xC0 | (cp >> 6));
    out += char(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += char(0xE0 | (cp >> 12));
    out += char(0x80 | ((cp >> 6) & 0x3F));
    out += char(0x80 | (cp & 0x3F));
  } else {
    out += char(0xF0 | (cp >> 18));
    out += char(0x80 | ((cp >> 12) & 0x3F));
    out += char(0x80 | ((cp >> 6) & 0x3F));
    out += char(0x80 | (cp & 0x3F));
  }
}

}  // namespace detail

// whitespace: split on ASCII whitespace runs, lossless modulo separators.
// unicode_word: extract word tokens (letters/digits/marks with interior
// apostrophes, per UAX-29's mid-letter rule); punctuation is dropped.
inline std::vector<std::string> tokenize(std::string_view text,
                                         TokenizerScheme scheme) {
  std::vector<std::string> out;
  if (scheme == TokenizerScheme::whitespace) {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
      std::size_t j = i;
      while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
      if (j > i) out.emplace_back(text.substr(i, j - i));
      i = j;
    }
    return out;
  }
  // unicode_word
  std::vector<std::pair<char32_t, bool>> cps;  // (codepoint, is_word)
  {
    std::size_t i = 0;
    while (i < text.size()) {
      const char32_t cp = detail::decode_utf8(text, i);
      cps.emplace_back(cp, detail::is_word_cp(cp));
    }
  }
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) { out.push_back(cur); cur.clear(); }
  };
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const auto [cp, word] = cps[i];
    if (word) {
      detail::append_utf8(cur, cp);
    } else if (detail::is_apostrophe(cp) && !cur.empty() && i + 1 < cps.size() &&
               cps[i + 1].second) {
      // Interior apostrophe between letters stays inside the word.
      detail::append_utf8(cur, cp);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

// ---------------------------------------------------------------------------
// Frequency tables

struct FreqTable {
  // Sorted by (count desc, token asc): ranks are 1-based positions here.
  std::vector<std::pair<std::string, long long>> items;
  long long total_tokens = 0;

  std::size_t vocab_size() const { return items.size(); }

  static FreqTable from_counts(const std::map<std::string, long long>& counts) {
    FreqTable t;
    t.items.reserve(counts.size());
    for (const auto& [tok, c] : counts) {
      if (c < 0) throw std::invalid_argument("FreqTable: negative count");
      if (c == 0) continue;
      t.items.emplace_back(tok, c);
      t.total_tokens += c;
    }
    std::sort(t.items.begin(), t.items.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    return t;
  }

  static FreqTable from_tokens(const std::vector<std::string>& tokens) {
    std::map<std::string, long long> counts;
    for (const auto& t : tokens) ++counts[t];
    return from_counts(counts);
  }
};

inline FreqTable build_frequency_table(const Corpus& corpus) {
  if (corpus.empty())
    throw std::invalid_argument("build_frequency_table: corpus is empty");
  std::map<std::string, long long> counts;
  for (const auto& p : corpus.passages)
    for (const auto& t : p.tokens) ++counts[t];
  return FreqTable::from_counts(counts);
}

// Normalized distribution over token types.
using Distribution = std::map<std::string, double>;

inline Distribution to_distribution(const FreqTable& t) {
  if (t.total_tokens <= 0)
    throw std::invalid_argument("to_distribution: empty frequency table");
  Distribution d;
  for (const auto& [tok, c] : t.items)
    d[tok] = double(c) / double(t.total_tokens);
  return d;
}

// Jensen-Shannon divergence, base-2 logarithm, range [0, 1].
inline double jensen_shannon_divergence(const Distribution& p,
                                        const Distribution& q) {
  auto check = [](const Distribution& d, const char* name) {
    double sum = 0.0;
    for (const auto& [tok, v] : d) {
      if (v < 0.0)
        throw std::invalid_argument(std::string("jsd: negative mass in ") + name);
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument(std::string("jsd: ") + name +
                                  " not normalized (|sum-1| > 1e-9)");
  };
  check(p, "p");
  check(q, "q");
  const double log2e = 1.0 / std::log(2.0);
  double acc = 0.0;
  auto kl_term = [&](double a, double m) {
    return (a > 0.0) ? a * std::log(a / m) * log2e : 0.0;
  };
  // Union support; missing mass = 0.
  auto it_p = p.begin();
  auto it_q = q.begin();
  while (it_p != p.end() || it_q != q.end()) {
    double pv = 0.0, qv = 0.0;
    if (it_q == q.end() || (it_p != p.end() && it_p->first < it_q->first)) {
      pv = it_p->second; ++it_p;
    } else if (it_p == p.end() || it_q->first < it_p->first) {
      qv = it_q->second; ++it_q;
    } else {
      pv = it_p->second; qv = it_q->second; ++it_p; ++it_q;
    }
    const double m = 0.5 * (pv + qv);
    if (m > 0.0) acc += 0.5 * kl_term(pv, m) + 0.5 * kl_term(qv, m);
  }
  return std::clamp(acc, 0.0, 1.0);
}

inline double jensen_shannon_divergence(const FreqTable& a, const FreqTable& b) {
  return jensen_shannon_divergence(to_distribution(a), to_distribution(b));
}

// ---------------------------------------------------------------------------
// Quartile decomposition

struct QuartileDecomposition {
  // members[0] = Q1 (rarest) ... members[3] = Q4 (most frequent).
  std::array<std::vector<std::string>, 4> members;
  // Three count thresholds: max count inside Q1, Q2, Q3.
  std::array<long long, 3> boundaries{};

  int quartile_of(const std::string& item) const {
    for (int q = 0; q < 4; ++q)
      for (const auto& m : members[q])
        if (m == item) return q;
    return -1;
  }
};

// Items sorted by count ascending (ties lexicographic by identifier), split
// into 4 groups; a remainder of r gives one extra item to each of the r
// lowest quartiles.
inline QuartileDecomposition quartile_split(
    const std::map<std::string, long long>& counts) {
  if (counts.size() < 4)
    throw std::invalid_argument("quartile_split: need >= 4 distinct items");
  std::vector<std::pair<std::string, long long>> items(counts.begin(),
                                                       counts.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second < b.second;
    return a.first < b.first;
  });
  const std::size_t n = items.size();
  const std::size_t base = n / 4, rem = n % 4;
  QuartileDecomposition qd;
  std::size_t pos = 0;
  for (int q = 0; q < 4; ++q) {
    const std::size_t sz = base + (std::size_t(q) < rem ? 1 : 0);
    for (std::size_t i = 0; i < sz; ++i)
      qd.members[q].push_back(items[pos + i].first);
    pos += sz;
    if (q < 3)
      qd.boundaries[q] = items[pos - 1].second;
  }
  return qd;
}

inline QuartileDecomposition quartile_split(const FreqTable& t) {
  std::map<std::string, long long> counts;
  for (const auto& [tok, c] : t.items) counts[tok] = c;
  return quartile_split(counts);
}

// Shannon entropy in bits of a count vector (plug-in estimate).
inline double entropy_bits(const std::vector<long long>& counts) {
  long long total = 0;
  for (long long c : counts) {
    if (c < 0) throw std::invalid_argument("entropy_bits: negative count");
    total += c;
  }
  if (total == 0) return 0.0;
  const double log2e = 1.0 / std::log(2.0);
  double h = 0.0;
  for (long long c : counts) {
    if (c == 0) continue;
    const double p = double(c) / double(total);
    h -= p * std::log(p) * log2e;
  }
  return h;
}

}  // namespace itlab
