#pragma once
// Probabilistic grammar for the regularized synthetic language: compile a
// line-based grammar description, generate passages with ground-truth
// meaning frames and form templates, and re-parse generated text.
//
// Grammar file format (one directive per line, '#' starts a comment):
//   grammar <name>
//   start <SYMBOL>
//   end <token>|none            sentence terminator (default ".")
//   morph <name> <pattern>      inflection template, e.g. "past {stem}ed"
//   cat <NAME> deprel=<rel> [head] [trigger]
//   lex <CAT> <word> <class> [<weight>]     weight defaults to 1/rank
//   rule <LHS> <prob> -> <sym> <sym> ...
//   frame <name> <prob> <predcat> [end=<tok>] :: <slot> <slot> ...
//     slot := label:SYMBOL[#template][!][=ROLE]   '!' marks the predicate

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "itlab/corpus.hpp"
#include "itlab/meaning.hpp"
#include "itlab/rng.hpp"

namespace itlab {

struct LexEntry {
  std::string word;
  std::string cls;
  double weight = 1.0;
};

struct Category {
  std::string name;
  std::string deprel;
  bool head = false;     // words of this category can serve as semantic heads
  bool trigger = false;  // words of this category open an inflection context
  std::vector<LexEntry> entries;
  std::set<std::string> declared_words;  // duplicate guard during compile
  std::vector<double> cum;               // cumulative weights for sampling
  double total_weight = 0.0;
};

struct Rule {
  std::string lhs;
  std::vector<std::string> rhs;
  double prob = 0.0;
};

struct FrameSlot {
  std::string label;       // form-template slot label
  std::string symbol;      // category or nonterminal
  std::string inflection;  // morph template name, empty = bare
  std::string role;        // semantic role label, empty = none
  bool predicate = false;  // set by '!' or resolved from the frame category
};

struct VerbFrame {
  std::string name;
  double prob = 0.0;
  std::string pred_category;
  std::string end_token;  // sentence terminator for this frame
  std::vector<FrameSlot> slots;
  std::size_t pred_slot = 0;
};

struct Grammar {
  std::string name = "grammar";
  std::string start = "S";
  std::string default_end = ".";  // empty = no terminator
  std::map<std::string, Category> categories;
  std::vector<Rule> rules;
  std::map<std::string, std::vector<std::size_t>> rules_by_lhs;
  std::vector<VerbFrame> frames;
  std::map<std::string, std::string> morph_templates;
  std::vector<std::string> warnings;

  // surface -> stem maps per (category, template), built at compile time
  std::map<std::pair<std::string, std::string>,
           std::map<std::string, std::string>>
      inflected_index;
  // surface -> entry index per category
  std::map<std::string, std::map<std::string, std::size_t>> surface_index;

  bool is_category(const std::string& s) const { return categories.count(s); }
  bool is_nonterminal(const std::string& s) const {
    return rules_by_lhs.count(s);
  }
  const Category& category(const std::string& s) const {
    auto it = categories.find(s);
    if (it == categories.end())
      throw std::invalid_argument("grammar: unknown category '" + s + "'");
    return it->second;
  }
};

namespace detail {

inline std::string apply_morph(const std::string& pattern,
                               const std::string& stem) {
  const auto pos = pattern.find("{stem}");
  return pattern.substr(0, pos) + stem + pattern.substr(pos + 6);
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline FrameSlot parse_slot(const std::string& text, int lineno) {
  const auto err = [&](const std::string& msg) {
    throw std::invalid_argument("grammar line " + std::to_string(lineno) +
                                ": bad slot '" + text + "': " + msg);
  };
  FrameSlot s;
  const auto colon = text.find(':');
  if (colon == std::string::npos || colon == 0) err("expected label:SYMBOL");
  s.label = text.substr(0, colon);
  std::string rest = text.substr(colon + 1);
  const auto eq = rest.find('=');
  if (eq != std::string::npos) {
    s.role = rest.substr(eq + 1);
    rest = rest.substr(0, eq);
    if (s.role.empty()) err("empty role");
  }
  if (!rest.empty() && rest.back() == '!') {
    s.predicate = true;
    rest.pop_back();
  }
  const auto hash = rest.find('#');
  if (hash != std::string::npos) {
    s.inflection = rest.substr(hash + 1);
    rest = rest.substr(0, hash);
    if (s.inflection.empty()) err("empty inflection name");
  }
  if (rest.empty()) err("empty symbol");
  s.symbol = rest;
  return s;
}

// Expected-occurrence matrix check: the grammar terminates in expectation
// iff the spectral radius of M[A][B] = sum_rules P(rule) * count(B in rhs)
// is < 1. Repeated squaring drives M^(2^k) to zero exactly when that holds.
inline bool terminates_in_expectation(const Grammar& g) {
  std::vector<std::string> nts;
  for (const auto& [lhs, idx] : g.rules_by_lhs) nts.push_back(lhs);
  const std::size_t n = nts.size();
  if (n == 0) return true;
  std::map<std::string, std::size_t> id;
  for (std::size_t i = 0; i < n; ++i) id[nts[i]] = i;
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  for (const auto& r : g.rules)
    for (const auto& sym : r.rhs)
      if (id.count(sym)) m[id.at(r.lhs)][id.at(sym)] += r.prob;
  for (int iter = 0; iter < 48; ++iter) {
    std::vector<std::vector<double>> sq(n, std::vector<double>(n, 0.0));
    double mx = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) {
        if (m[i][k] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) sq[i][j] += m[i][k] * m[k][j];
      }
    for (const auto& row : sq)
      for (double v : row) mx = std::max(mx, v);
    if (mx > 1e30) return false;  // diverging: radius > 1
    m = std::move(sq);
    if (mx < 1e-12) return true;  // vanished: radius < 1
  }
  return false;  // stuck near radius 1: treat as non-terminating
}

// every nonterminal must be able to derive a string of category words
inline std::set<std::string> productive_nonterminals(const Grammar& g) {
  std::set<std::string> done;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& r : g.rules) {
      if (done.count(r.lhs)) continue;
      bool all = true;
      for (const auto& sym : r.rhs)
        if (!g.is_category(sym) && !done.count(sym)) all = false;
      if (all) {
        done.insert(r.lhs);
        changed = true;
      }
    }
  }
  return done;
}

}  // namespace detail

inline Grammar compile_grammar(const std::string& text) {
  Grammar g;
  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  bool end_set = false;
  struct PendingRule {
    std::vector<std::string> toks;
    int lineno;
  };
  std::vector<std::pair<std::vector<std::string>, int>> rule_lines, frame_lines,
      lex_lines;

  const auto fail = [](int ln, const std::string& msg) {
    throw std::invalid_argument("grammar line " + std::to_string(ln) + ": " +
                                msg);
  };

  while (std::getline(is, raw)) {
    ++lineno;
    // comments start at '#' only at line start or after whitespace; a bare
    // '#' inside a token is slot syntax (inflection marker)
    for (std::size_t i = 0; i < raw.size(); ++i)
      if (raw[i] == '#' &&
          (i == 0 || raw[i - 1] == ' ' || raw[i - 1] == '\t')) {
        raw = raw.substr(0, i);
        break;
      }
    auto toks = detail::split_ws(raw);
    if (toks.empty()) continue;
    const std::string& d = toks[0];
    if (d == "grammar") {
      if (toks.size() != 2) fail(lineno, "usage: grammar <name>");
      g.name = toks[1];
    } else if (d == "start") {
      if (toks.size() != 2) fail(lineno, "usage: start <SYMBOL>");
      g.start = toks[1];
    } else if (d == "end") {
      if (toks.size() != 2) fail(lineno, "usage: end <token>|none");
      g.default_end = (toks[1] == "none") ? "" : toks[1];
      end_set = true;
    } else if (d == "morph") {
      if (toks.size() != 3) fail(lineno, "usage: morph <name> <pattern>");
      if (toks[2].find("{stem}") == std::string::npos)
        fail(lineno, "morph pattern must contain {stem}");
      if (!g.morph_templates.emplace(toks[1], toks[2]).second)
        fail(lineno, "duplicate morph template '" + toks[1] + "'");
    } else if (d == "cat") {
      if (toks.size() < 2) fail(lineno, "usage: cat <NAME> [deprel=..] [head] [trigger]");
      Category c;
      c.name = toks[1];
      c.deprel = "dep";
      for (std::size_t i = 2; i < toks.size(); ++i) {
        if (toks[i].rfind("deprel=", 0) == 0)
          c.deprel = toks[i].substr(7);
        else if (toks[i] == "head")
          c.head = true;
        else if (toks[i] == "trigger")
          c.trigger = true;
        else
          fail(lineno, "unknown category flag '" + toks[i] + "'");
      }
      if (!g.categories.emplace(c.name, c).second)
        fail(lineno, "duplicate category '" + c.name + "'");
    } else if (d == "lex") {
      lex_lines.emplace_back(toks, lineno);
    } else if (d == "rule") {
      rule_lines.emplace_back(toks, lineno);
    } else if (d == "frame") {
      frame_lines.emplace_back(toks, lineno);
    } else {
      fail(lineno, "unknown directive '" + d + "'");
    }
  }
  (void)end_set;

  for (const auto& [toks, ln] : lex_lines) {
    if (toks.size() != 4 && toks.size() != 5)
      fail(ln, "usage: lex <CAT> <word> <class> [<weight>]");
    auto it = g.categories.find(toks[1]);
    if (it == g.categories.end())
      fail(ln, "lex entry for undeclared category '" + toks[1] + "'");
    LexEntry e;
    e.word = toks[2];
    e.cls = toks[3];
    if (toks.size() == 5) {
      e.weight = std::stod(toks[4]);
    } else {
      e.weight = 1.0 / double(it->second.entries.size() + 1);  // Zipf by rank
    }
    if (!(e.weight > 0.0)) fail(ln, "lex weight must be > 0");
    if (it->second.declared_words.count(e.word))
      fail(ln, "duplicate word '" + e.word + "' in category " + toks[1]);
    it->second.declared_words.insert(e.word);
    it->second.entries.push_back(e);
  }

  for (const auto& [toks, ln] : rule_lines) {
    if (toks.size() < 5 || toks[3] != "->")
      fail(ln, "usage: rule <LHS> <prob> -> <sym> ...");
    Rule r;
    r.lhs = toks[1];
    r.prob = std::stod(toks[2]);
    if (!(r.prob > 0.0)) fail(ln, "rule probability must be > 0");
    for (std::size_t i = 4; i < toks.size(); ++i) r.rhs.push_back(toks[i]);
    if (g.is_category(r.lhs))
      fail(ln, "rule lhs '" + r.lhs + "' is a lexical category");
    g.rules_by_lhs[r.lhs].push_back(g.rules.size());
    g.rules.push_back(r);
  }

  for (const auto& [toks, ln] : frame_lines) {
    auto sep = std::find(toks.begin(), toks.end(), "::");
    if (sep == toks.end() || sep - toks.begin() < 4)
      fail(ln, "usage: frame <name> <prob> <predcat> [end=<tok>] :: <slots>");
    VerbFrame f;
    f.name = toks[1];
    f.prob = std::stod(toks[2]);
    if (!(f.prob > 0.0)) fail(ln, "frame probability must be > 0");
    f.pred_category = toks[3];
    f.end_token = g.default_end;
    for (auto it = toks.begin() + 4; it != sep; ++it) {
      if (it->rfind("end=", 0) == 0)
        f.end_token = (it->substr(4) == "none") ? "" : it->substr(4);
      else
        fail(ln, "unknown frame option '" + *it + "'");
    }
    for (auto it = sep + 1; it != toks.end(); ++it)
      f.slots.push_back(detail::parse_slot(*it, ln));
    if (f.slots.empty()) fail(ln, "frame has no slots");

    std::set<std::string> roles;
    std::size_t pred_marks = 0;
    for (const auto& s : f.slots) {
      if (!s.role.empty() && !roles.insert(s.role).second)
        fail(ln, "duplicate role '" + s.role + "' in frame " + f.name);
      if (s.predicate) ++pred_marks;
    }
    if (pred_marks > 1) fail(ln, "frame " + f.name + " marks two predicates");
    if (pred_marks == 1) {
      for (std::size_t i = 0; i < f.slots.size(); ++i)
        if (f.slots[i].predicate) f.pred_slot = i;
      if (f.slots[f.pred_slot].symbol != f.pred_category)
        fail(ln, "predicate slot symbol differs from frame category");
    } else {
      bool found = false;
      for (std::size_t i = 0; i < f.slots.size() && !found; ++i)
        if (f.slots[i].symbol == f.pred_category) {
          f.pred_slot = i;
          f.slots[i].predicate = true;
          found = true;
        }
      if (!found)
        fail(ln, "frame " + f.name + " has no slot of its predicate category");
    }
    g.frames.push_back(f);
  }

  // ---- validation ----
  if (!g.frames.empty() && g.rules_by_lhs.count(g.start))
    throw std::invalid_argument(
        "grammar: start symbol cannot carry both frames and rules");
  if (g.frames.empty() && !g.rules_by_lhs.count(g.start))
    throw std::invalid_argument("grammar: start symbol '" + g.start +
                                "' has no rules and no frames are declared");

  const auto check_symbol = [&](const std::string& sym, const std::string& ctx) {
    if (!g.is_category(sym) && !g.is_nonterminal(sym))
      throw std::invalid_argument("grammar: " + ctx + " references undefined symbol '" +
                                  sym + "'");
  };
  for (const auto& r : g.rules)
    for (const auto& sym : r.rhs) check_symbol(sym, "rule " + r.lhs);
  for (const auto& f : g.frames) {
    for (const auto& s : f.slots) {
      check_symbol(s.symbol, "frame " + f.name);
      if (!s.inflection.empty()) {
        if (!g.morph_templates.count(s.inflection))
          throw std::invalid_argument("grammar: frame " + f.name +
                                      " uses unknown morph template '" +
                                      s.inflection + "'");
        if (!g.is_category(s.symbol))
          throw std::invalid_argument("grammar: frame " + f.name +
                                      ": only lexical categories inflect");
      }
    }
  }

  for (const auto& [lhs, idxs] : g.rules_by_lhs) {
    double sum = 0.0;
    for (auto i : idxs) sum += g.rules[i].prob;
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("grammar: probabilities for '" + lhs +
                                  "' sum to " + std::to_string(sum));
  }
  if (!g.frames.empty()) {
    double sum = 0.0;
    for (const auto& f : g.frames) sum += f.prob;
    if (std::abs(sum - 1.0) > 1e-9)
      throw std::invalid_argument("grammar: frame probabilities sum to " +
                                  std::to_string(sum));
  }

  const auto productive = detail::productive_nonterminals(g);
  for (const auto& [lhs, idxs] : g.rules_by_lhs)
    if (!productive.count(lhs))
      throw std::invalid_argument("grammar: nonterminal '" + lhs +
                                  "' cannot derive any terminal string");
  if (!detail::terminates_in_expectation(g))
    throw std::invalid_argument(
        "grammar: expected derivation size is infinite (recursion with "
        "probability mass >= 1)");

  // reachability: warn, do not fail
  std::set<std::string> reach;
  std::vector<std::string> work;
  const auto push = [&](const std::string& sym) {
    if (reach.insert(sym).second) work.push_back(sym);
  };
  if (g.frames.empty()) push(g.start);
  for (const auto& f : g.frames)
    for (const auto& s : f.slots) push(s.symbol);
  while (!work.empty()) {
    const auto sym = work.back();
    work.pop_back();
    if (!g.is_nonterminal(sym)) continue;
    for (auto i : g.rules_by_lhs.at(sym))
      for (const auto& s : g.rules[i].rhs) push(s);
  }
  for (const auto& [lhs, _] : g.rules_by_lhs)
    if (!reach.count(lhs))
      g.warnings.push_back("unreachable nonterminal '" + lhs + "'");
  for (const auto& [name, cat] : g.categories) {
    if (!reach.count(name))
      g.warnings.push_back("unused category '" + name + "'");
    else if (cat.entries.empty())
      throw std::invalid_argument("grammar: category '" + name +
                                  "' is used but has no lexicon entries");
  }

  // ---- compiled caches ----
  for (auto& [name, cat] : g.categories) {
    cat.cum.clear();
    double acc = 0.0;
    for (const auto& e : cat.entries) {
      acc += e.weight;
      cat.cum.push_back(acc);
    }
    cat.total_weight = acc;
    auto& idx = g.surface_index[name];
    for (std::size_t i = 0; i < cat.entries.size(); ++i)
      idx[cat.entries[i].word] = i;
  }
  for (const auto& f : g.frames)
    for (const auto& s : f.slots)
      if (!s.inflection.empty()) {
        auto key = std::make_pair(s.symbol, s.inflection);
        if (g.inflected_index.count(key)) continue;
        auto& m = g.inflected_index[key];
        const auto& pattern = g.morph_templates.at(s.inflection);
        for (const auto& e : g.category(s.symbol).entries) {
          const auto surface = detail::apply_morph(pattern, e.word);
          if (!m.emplace(surface, e.word).second)
            throw std::invalid_argument("grammar: inflection collision on '" +
                                        surface + "'");
        }
      }
  return g;
}

inline Grammar load_grammar_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw std::invalid_argument("grammar: cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return compile_grammar(ss.str());
}

// ------------------------------------------------------------ generation ---

// map (lhs or frame marker, rule index within lhs) -> usage count
struct RuleCounter {
  std::map<std::pair<std::string, std::size_t>, std::uint64_t> rule_uses;
  std::map<std::string, std::uint64_t> frame_uses;
};

struct SentenceRecord {
  std::vector<std::string> tokens;
  std::vector<TokenAnnotation> annotations;
  std::optional<MeaningFrame> meaning;
  std::optional<FormTemplate> form;
  std::string frame_name;
};

namespace detail {

struct YieldWord {
  std::string surface;
  std::string lemma;
  std::string cls;
  std::string category;
  bool head_cat = false;
};

inline const LexEntry& sample_word(const Category& cat, Rng& rng) {
  const double u = rng.uniform01() * cat.total_weight;
  const auto it = std::lower_bound(cat.cum.begin(), cat.cum.end(), u);
  const std::size_t i =
      std::min<std::size_t>(it - cat.cum.begin(), cat.entries.size() - 1);
  return cat.entries[i];
}

inline void expand(const Grammar& g, const std::string& sym, Rng& rng,
                   std::vector<YieldWord>& out, RuleCounter* counter,
                   int depth = 0) {
  if (depth > 64)
    throw std::runtime_error("grammar: expansion depth limit exceeded");
  if (g.is_category(sym)) {
    const auto& cat = g.category(sym);
    const auto& e = sample_word(cat, rng);
    out.push_back({e.word, e.word, e.cls, sym, cat.head});
    return;
  }
  const auto& idxs = g.rules_by_lhs.at(sym);
  double u = rng.uniform01();
  std::size_t pick = idxs.size() - 1;
  for (std::size_t k = 0; k < idxs.size(); ++k) {
    u -= g.rules[idxs[k]].prob;
    if (u <= 0.0) {
      pick = k;
      break;
    }
  }
  if (counter) ++counter->rule_uses[{sym, pick}];
  for (const auto& child : g.rules[idxs[pick]].rhs)
    expand(g, child, rng, out, counter, depth + 1);
}

}  // namespace detail

inline SentenceRecord generate_sentence(const Grammar& g, Rng& rng,
                                        RuleCounter* counter = nullptr) {
  SentenceRecord rec;
  std::vector<std::vector<detail::YieldWord>> slot_yields;
  std::string end_token = g.default_end;

  if (g.frames.empty()) {
    std::vector<detail::YieldWord> yield;
    detail::expand(g, g.start, rng, yield, counter);
    slot_yields.push_back(std::move(yield));
  } else {
    double u = rng.uniform01();
    std::size_t pick = g.frames.size() - 1;
    for (std::size_t k = 0; k < g.frames.size(); ++k) {
      u -= g.frames[k].prob;
      if (u <= 0.0) {
        pick = k;
        break;
      }
    }
    const auto& f = g.frames[pick];
    if (counter) ++counter->frame_uses[f.name];
    rec.frame_name = f.name;
    end_token = f.end_token;

    MeaningFrame meaning;
    FormTemplate form;
    for (const auto& s : f.slots) {
      std::vector<detail::YieldWord> yield;
      if (!s.inflection.empty()) {
        const auto& cat = g.category(s.symbol);
        const auto& e = detail::sample_word(cat, rng);
        const auto& pattern = g.morph_templates.at(s.inflection);
        yield.push_back({detail::apply_morph(pattern, e.word), e.word, e.cls,
                         s.symbol, cat.head});
      } else {
        detail::expand(g, s.symbol, rng, yield, counter);
      }
      form.slots.push_back(s.label);
      // semantic filler: last head-category word, else last word of the slot
      const detail::YieldWord* head = nullptr;
      for (const auto& w : yield)
        if (w.head_cat) head = &w;
      if (!head && !yield.empty()) head = &yield.back();
      if (s.predicate) {
        meaning.predicate = head->lemma;
        meaning.predicate_class = head->cls;
      }
      if (!s.role.empty()) {
        meaning.roles[s.role] = head->lemma;
        meaning.role_classes[s.role] = head->cls;
      }
      slot_yields.push_back(std::move(yield));
    }
    rec.meaning = std::move(meaning);
    rec.form = std::move(form);
  }

  // flatten tokens and build annotations; the predicate token is the root
  std::vector<std::size_t> slot_head_pos(slot_yields.size(), 0);
  for (std::size_t si = 0; si < slot_yields.size(); ++si) {
    std::size_t head_local = slot_yields[si].empty()
                                 ? 0
                                 : slot_yields[si].size() - 1;
    for (std::size_t wi = 0; wi < slot_yields[si].size(); ++wi)
      if (slot_yields[si][wi].head_cat) head_local = wi;
    slot_head_pos[si] = rec.tokens.size() + head_local;
    for (const auto& w : slot_yields[si]) rec.tokens.push_back(w.surface);
  }
  std::size_t root = 0;
  if (!g.frames.empty()) {
    const auto& f = g.frames[std::size_t(
        std::find_if(g.frames.begin(), g.frames.end(),
                     [&](const VerbFrame& vf) { return vf.name == rec.frame_name; }) -
        g.frames.begin())];
    root = slot_head_pos[f.pred_slot];
    std::size_t tok = 0;
    for (std::size_t si = 0; si < slot_yields.size(); ++si) {
      for (std::size_t wi = 0; wi < slot_yields[si].size(); ++wi, ++tok) {
        TokenAnnotation a;
        const auto& w = slot_yields[si][wi];
        a.lemma = w.lemma;
        a.upos = w.category;
        if (tok == root) {
          a.head = 0;
          a.deprel = f.slots[si].label;
        } else if (tok == slot_head_pos[si]) {
          a.head = int(root) + 1;
          a.deprel = f.slots[si].label;
        } else {
          a.head = int(slot_head_pos[si]) + 1;
          a.deprel = g.category(w.category).deprel;
        }
        rec.annotations.push_back(a);
      }
    }
  } else {
    for (std::size_t t = 0; t < rec.tokens.size(); ++t) {
      TokenAnnotation a;
      a.head = 0;
      a.deprel = "dep";
      a.lemma = rec.tokens[t];
      rec.annotations.push_back(a);
    }
  }
  if (!end_token.empty()) {
    rec.tokens.push_back(end_token);
    TokenAnnotation a;
    a.head = int(root) + 1;
    a.deprel = "punct";
    a.lemma = end_token;
    a.upos = "PUNCT";
    rec.annotations.push_back(a);
  }
  return rec;
}

struct GeneratedPassage {
  Passage passage;
  std::vector<MeaningFrame> meanings;   // one per frame-derived sentence
  std::vector<FormTemplate> forms;      // aligned with meanings
  std::vector<std::string> frame_names;  // aligned with meanings
  std::vector<std::size_t> sentence_of_frame;  // sentence index per meaning
};

inline GeneratedPassage generate_passage(const Grammar& g, Rng& rng,
                                         std::size_t min_tokens,
                                         std::size_t max_tokens,
                                         int budget = 1000) {
  if (min_tokens == 0 || max_tokens < min_tokens)
    throw std::invalid_argument("generate_passage: bad length bounds");
  for (int attempt = 0; attempt < budget; ++attempt) {
    GeneratedPassage out;
    auto& p = out.passage;
    std::size_t sentence_idx = 0;
    while (p.tokens.size() < min_tokens) {
      auto rec = generate_sentence(g, rng);
      const std::size_t begin = p.tokens.size();
      const int offset = int(begin);
      for (auto a : rec.annotations) {
        if (a.head > 0) a.head += offset;
        p.annotations.push_back(a);
      }
      p.tokens.insert(p.tokens.end(), rec.tokens.begin(), rec.tokens.end());
      p.sentence_spans.emplace_back(begin, p.tokens.size());
      p.sentence_forms.push_back(rec.form ? rec.form->slots
                                          : std::vector<std::string>{});
      if (rec.meaning) {
        out.meanings.push_back(std::move(*rec.meaning));
        out.forms.push_back(std::move(*rec.form));
        out.frame_names.push_back(rec.frame_name);
        out.sentence_of_frame.push_back(sentence_idx);
      }
      ++sentence_idx;
    }
    if (p.tokens.size() <= max_tokens) return out;
  }
  throw std::runtime_error(
      "generate_passage: rejection budget exhausted for bounds [" +
      std::to_string(min_tokens) + ", " + std::to_string(max_tokens) + "]");
}

struct SeedResult {
  Corpus corpus;
  std::vector<std::vector<MeaningFrame>> meanings;  // per passage
  std::vector<std::vector<FormTemplate>> forms;
  std::vector<std::vector<std::string>> frame_names;
};

inline SeedResult generate_seed(const Grammar& g, std::size_t n, Rng& rng,
                                std::size_t min_tokens = 100,
                                std::size_t max_tokens = 300) {
  if (n < 1) throw std::invalid_argument("generate_seed: n must be >= 1");
  SeedResult out;
  out.corpus.origin = CorpusOrigin::seed_regularized;
  const std::uint64_t master = rng.next_u64();
  for (std::size_t i = 0; i < n; ++i) {
    Rng sub = Rng::derive(master, {i});
    auto gp = generate_passage(g, sub, min_tokens, max_tokens);
    char id[32];
    std::snprintf(id, sizeof(id), "g0-p%06zu", i);
    gp.passage.id = id;
    gp.passage.generation = 0;
    out.corpus.passages.push_back(std::move(gp.passage));
    out.meanings.push_back(std::move(gp.meanings));
    out.forms.push_back(std::move(gp.forms));
    out.frame_names.push_back(std::move(gp.frame_names));
  }
  return out;
}

// ----------------------------------------------------------- recognition ---

struct RecognizedSentence {
  bool ok = false;
  FormTemplate form;
  MeaningFrame meaning;
  std::string frame_name;
};

namespace detail {

struct ParseHyp {
  std::size_t end = 0;
  bool has_head = false;
  std::string head_lemma, head_cls;   // last head-category word in span
  std::string last_lemma, last_cls;   // last word in span (fallback filler)
};

struct Parser {
  const Grammar& g;
  const std::vector<std::string>& toks;
  std::map<std::pair<std::string, std::size_t>, std::vector<ParseHyp>> memo;

  // hypotheses for one symbol starting at pos; first derivation per end wins
  const std::vector<ParseHyp>& parse(const std::string& sym, std::size_t pos) {
    const auto key = std::make_pair(sym, pos);
    auto found = memo.find(key);
    if (found != memo.end()) return found->second;
    auto& out = memo[key];  // inserted empty first: recursion sees no repeats
    if (g.is_category(sym)) {
      if (pos < toks.size()) {
        const auto& idx = g.surface_index.at(sym);
        auto it = idx.find(toks[pos]);
        if (it != idx.end()) {
          const auto& e = g.category(sym).entries[it->second];
          ParseHyp h;
          h.end = pos + 1;
          h.has_head = g.category(sym).head;
          h.head_lemma = h.last_lemma = e.word;
          h.head_cls = h.last_cls = e.cls;
          out.push_back(h);
        }
      }
      return out;
    }
    std::set<std::size_t> seen;
    for (auto ri : g.rules_by_lhs.at(sym)) {
      std::vector<ParseHyp> partial{ParseHyp{pos, false, "", "", "", ""}};
      for (const auto& child : g.rules[ri].rhs) {
        std::vector<ParseHyp> next;
        for (const auto& left : partial)
          for (const auto& h : parse(child, left.end)) {
            ParseHyp merged = left;
            merged.end = h.end;
            if (h.has_head) {
              merged.has_head = true;
              merged.head_lemma = h.head_lemma;
              merged.head_cls = h.head_cls;
            }
            merged.last_lemma = h.last_lemma;
            merged.last_cls = h.last_cls;
            next.push_back(merged);
          }
        partial = std::move(next);
        if (partial.empty()) break;
      }
      for (const auto& h : partial)
        if (seen.insert(h.end).second) out.push_back(h);
    }
    return out;
  }

  // match an inflected or bare slot at pos
  std::vector<ParseHyp> parse_slot(const FrameSlot& s, std::size_t pos) {
    if (s.inflection.empty()) {
      return parse(s.symbol, pos);
    }
    std::vector<ParseHyp> out;
    if (pos < toks.size()) {
      const auto& m = g.inflected_index.at({s.symbol, s.inflection});
      auto it = m.find(toks[pos]);
      if (it != m.end()) {
        const auto& cat = g.category(s.symbol);
        const auto& e = cat.entries[g.surface_index.at(s.symbol).at(it->second)];
        ParseHyp h;
        h.end = pos + 1;
        h.has_head = cat.head;
        h.head_lemma = h.last_lemma = e.word;
        h.head_cls = h.last_cls = e.cls;
        out.push_back(h);
      }
    }
    return out;
  }
};

}  // namespace detail

// tokens must cover exactly one sentence, terminator included when the
// matching frame declares one
inline RecognizedSentence recognize_sentence(const Grammar& g,
                                             const std::vector<std::string>& tokens) {
  RecognizedSentence out;
  if (g.frames.empty() || tokens.empty()) return out;
  detail::Parser parser{g, tokens, {}};
  for (const auto& f : g.frames) {
    const std::size_t content_len =
        f.end_token.empty() ? tokens.size() : tokens.size() - 1;
    if (!f.end_token.empty() && tokens.back() != f.end_token) continue;

    // depth-first over slot alternatives, first full cover wins
    std::vector<detail::ParseHyp> chosen(f.slots.size());
    std::vector<std::vector<detail::ParseHyp>> options(f.slots.size());
    std::vector<std::size_t> cursor(f.slots.size(), 0);
    std::size_t si = 0;
    std::size_t pos = 0;
    bool matched = false;
    while (true) {
      if (si == f.slots.size()) {
        if (pos == content_len) {
          matched = true;
          break;
        }
        if (si == 0) break;
        --si;
        ++cursor[si];
        pos = si == 0 ? 0 : chosen[si - 1].end;
        continue;
      }
      if (cursor[si] == 0) options[si] = parser.parse_slot(f.slots[si], pos);
      bool advanced = false;
      while (cursor[si] < options[si].size()) {
        const auto& h = options[si][cursor[si]];
        if (h.end <= content_len) {
          chosen[si] = h;
          pos = h.end;
          ++si;
          if (si < f.slots.size()) cursor[si] = 0;
          advanced = true;
          break;
        }
        ++cursor[si];
      }
      if (advanced) continue;
      if (si == 0) break;
      cursor[si] = 0;
      --si;
      ++cursor[si];
      pos = si == 0 ? 0 : chosen[si - 1].end;
    }
    if (!matched) continue;

    out.ok = true;
    out.frame_name = f.name;
    for (std::size_t i = 0; i < f.slots.size(); ++i) {
      out.form.slots.push_back(f.slots[i].label);
      const auto& h = chosen[i];
      const std::string lemma = h.has_head ? h.head_lemma : h.last_lemma;
      const std::string cls = h.has_head ? h.head_cls : h.last_cls;
      if (f.slots[i].predicate) {
        out.meaning.predicate = lemma;
        out.meaning.predicate_class = cls;
      }
      if (!f.slots[i].role.empty()) {
        out.meaning.roles[f.slots[i].role] = lemma;
        out.meaning.role_classes[f.slots[i].role] = cls;
      }
    }
    return out;
  }
  return out;
}

// split a passage into sentences on terminator tokens and re-parse each
inline std::vector<RecognizedSentence> recognize_passage(const Grammar& g,
                                                         const Passage& p) {
  std::set<std::string> enders;
  if (!g.default_end.empty()) enders.insert(g.default_end);
  for (const auto& f : g.frames)
    if (!f.end_token.empty()) enders.insert(f.end_token);
  std::vector<RecognizedSentence> out;
  std::vector<std::string> cur;
  for (const auto& t : p.tokens) {
    cur.push_back(t);
    if (enders.count(t)) {
      out.push_back(recognize_sentence(g, cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(recognize_sentence(g, cur));
  return out;
}

// ------------------------------------------------------------- vocabulary ---

// every surface form the grammar can emit (closed lexicon bound)
inline std::set<std::string> surface_vocabulary(const Grammar& g) {
  std::set<std::string> vocab;
  std::set<std::string> bare_cats;
  std::vector<std::string> work;
  const auto push_nt = [&](const std::string& sym) {
    if (g.is_category(sym)) {
      bare_cats.insert(sym);
      return;
    }
    work.push_back(sym);
  };
  if (g.frames.empty()) {
    push_nt(g.start);
    if (!g.default_end.empty()) vocab.insert(g.default_end);
  }
  for (const auto& f : g.frames) {
    if (!f.end_token.empty()) vocab.insert(f.end_token);
    for (const auto& s : f.slots) {
      if (!s.inflection.empty()) {
        const auto& pattern = g.morph_templates.at(s.inflection);
        for (const auto& e : g.category(s.symbol).entries)
          vocab.insert(detail::apply_morph(pattern, e.word));
      } else {
        push_nt(s.symbol);
      }
    }
  }
  std::set<std::string> visited;
  while (!work.empty()) {
    const auto sym = work.back();
    work.pop_back();
    if (!visited.insert(sym).second) continue;
    for (auto i : g.rules_by_lhs.at(sym))
      for (const auto& child : g.rules[i].rhs) push_nt(child);
  }
  for (const auto& c : bare_cats)
    for (const auto& e : g.category(c).entries) vocab.insert(e.word);
  return vocab;
}

// words that open an inflection-demanding context (trigger categories)
inline std::set<std::string> trigger_words(const Grammar& g) {
  std::set<std::string> out;
  for (const auto& [name, cat] : g.categories)
    if (cat.trigger)
      for (const auto& e : cat.entries) out.insert(e.word);
  return out;
}

}  // namespace itlab
