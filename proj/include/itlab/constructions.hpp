#pragma once
// Construction inventory, dependency-pattern matcher, diversity report with
// quartile decomposition, and survival (entrenchment) analysis.
//
// Pattern DSL: a pattern is a whitespace-separated, order-sensitive list of
// elements covering one whole sentence. '*' is a gap matching zero or more
// slots; every other element is
//     rel[/POS][@lex]
// and matches exactly one slot whose relation label equals rel, whose POS
// tag equals POS (when given), and whose surface form or lemma equals lex
// (when given). A pattern needs at least one non-gap element.
//
// Sentences are slot sequences taken from a passage's ground-truth templates
// when present (relation labels only, so POS- or lexeme-anchored constraints
// never match a template slot), else from its dependency annotations
// (deprel / upos / surface+lemma per token). Raw strings are never matched.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "corpus.hpp"
#include "csv.hpp"
#include "mathutil.hpp"

namespace itlab {

// ------------------------------------------------------------- inventory ---

enum class ConstructionCategory { syntactic, morphological, pragmatic, discourse };

inline const char* category_name(ConstructionCategory c) {
  switch (c) {
    case ConstructionCategory::syntactic: return "syntactic";
    case ConstructionCategory::morphological: return "morphological";
    case ConstructionCategory::pragmatic: return "pragmatic";
    case ConstructionCategory::discourse: return "discourse";
  }
  throw std::logic_error("category_name: bad enum value");
}

inline ConstructionCategory category_from_name(const std::string& s) {
  if (s == "syntactic") return ConstructionCategory::syntactic;
  if (s == "morphological") return ConstructionCategory::morphological;
  if (s == "pragmatic") return ConstructionCategory::pragmatic;
  if (s == "discourse") return ConstructionCategory::discourse;
  throw std::invalid_argument("construction category '" + s +
                              "' is not one of syntactic/morphological/"
                              "pragmatic/discourse");
}

struct PatternSlot {
  bool gap = false;
  std::string rel;  // relation label, required on non-gap slots
  std::string pos;  // optional POS constraint
  std::string lex;  // optional lexical anchor (surface or lemma)
};

struct ConstructionPattern {
  std::string text;
  std::vector<PatternSlot> slots;
};

inline ConstructionPattern parse_pattern(const std::string& text) {
  ConstructionPattern p;
  p.text = text;
  std::istringstream ss(text);
  std::string el;
  std::size_t constraints = 0;
  while (ss >> el) {
    PatternSlot s;
    if (el == "*") {
      s.gap = true;
      p.slots.push_back(s);
      continue;
    }
    if (el.find('*') != std::string::npos)
      throw std::invalid_argument("pattern '" + text +
                                  "': '*' must stand alone");
    std::string core = el;
    const auto at = core.find('@');
    if (at != std::string::npos) {
      s.lex = core.substr(at + 1);
      core = core.substr(0, at);
      if (s.lex.empty())
        throw std::invalid_argument("pattern '" + text +
                                    "': empty lexical anchor in '" + el + "'");
    }
    const auto sl = core.find('/');
    if (sl != std::string::npos) {
      s.pos = core.substr(sl + 1);
      core = core.substr(0, sl);
      if (s.pos.empty())
        throw std::invalid_argument("pattern '" + text +
                                    "': empty POS constraint in '" + el + "'");
    }
    s.rel = core;
    if (s.rel.empty())
      throw std::invalid_argument("pattern '" + text +
                                  "': element '" + el +
                                  "' lacks a relation label");
    ++constraints;
    p.slots.push_back(std::move(s));
  }
  if (p.slots.empty())
    throw std::invalid_argument("pattern: empty");
  if (constraints == 0)
    throw std::invalid_argument("pattern '" + text +
                                "': needs at least one non-gap element");
  return p;
}

struct ConstructionEntry {
  std::string name;
  ConstructionCategory category = ConstructionCategory::syntactic;
  ConstructionPattern pattern;
  long long seed_freq = 0;  // type frequency in the seed data; 0 = absent
};

struct ConstructionInventory {
  std::vector<ConstructionEntry> entries;
  std::string version_hash;  // FNV-1a 64 of the source text, hex

  const ConstructionEntry* find(const std::string& name) const {
    for (const auto& e : entries)
      if (e.name == name) return &e;
    return nullptr;
  }
};

namespace detail {

inline std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline long long parse_count(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument(what + ": '" + s + "' is not an integer");
  }
  if (used != s.size())
    throw std::invalid_argument(what + ": '" + s + "' is not an integer");
  return v;
}

}  // namespace detail

inline ConstructionInventory parse_inventory(const std::string& text) {
  std::istringstream is(text);
  const csv::Table t = csv::read_table(is);
  for (const char* col : {"name", "category", "pattern", "seed_freq"})
    if (!t.has_column(col))
      throw std::invalid_argument(
          std::string("inventory: missing column '") + col + "'");
  const std::size_t cn = t.column("name"), cc = t.column("category"),
                    cp = t.column("pattern"), cf = t.column("seed_freq");
  ConstructionInventory inv;
  inv.version_hash = detail::fnv1a64_hex(text);
  for (const auto& row : t.rows) {
    ConstructionEntry e;
    e.name = row.at(cn);
    if (e.name.empty())
      throw std::invalid_argument("inventory: empty construction name");
    if (inv.find(e.name))
      throw std::invalid_argument("inventory: duplicate construction '" +
                                  e.name + "'");
    e.category = category_from_name(row.at(cc));
    e.pattern = parse_pattern(row.at(cp));
    e.seed_freq =
        detail::parse_count(row.at(cf), "inventory: seed_freq of " + e.name);
    if (e.seed_freq < 0)
      throw std::invalid_argument("inventory: negative seed_freq for '" +
                                  e.name + "'");
    inv.entries.push_back(std::move(e));
  }
  return inv;
}

inline ConstructionInventory load_inventory_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open inventory file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_inventory(ss.str());
}

// -------------------------------------------------------------- matching ---

namespace detail {

struct SlotView {
  std::string rel, pos, surface, lemma;
};

inline bool slot_matches(const PatternSlot& c, const SlotView& s) {
  if (c.rel != s.rel) return false;
  if (!c.pos.empty() && c.pos != s.pos) return false;
  if (!c.lex.empty() && c.lex != s.surface && c.lex != s.lemma) return false;
  return true;
}

// Whole-sentence match with '*' gaps: textbook wildcard DP over slot views.
inline bool pattern_matches(const ConstructionPattern& p,
                            const std::vector<SlotView>& sent) {
  const std::size_t n = sent.size();
  std::vector<char> prev(n + 1, 0), cur(n + 1, 0);
  prev[0] = 1;
  for (const auto& ps : p.slots) {
    if (ps.gap) {
      cur[0] = prev[0];
      for (std::size_t j = 1; j <= n; ++j)
        cur[j] = char(prev[j] | cur[j - 1]);
    } else {
      cur[0] = 0;
      for (std::size_t j = 1; j <= n; ++j)
        cur[j] = char(prev[j - 1] && slot_matches(ps, sent[j - 1]));
    }
    std::swap(prev, cur);
  }
  return prev[n] != 0;
}

inline std::vector<std::vector<SlotView>> sentence_slot_views(
    const Passage& p) {
  std::vector<std::vector<SlotView>> sentences;
  if (p.has_templates()) {
    for (const auto& labels : p.sentence_forms) {
      std::vector<SlotView> s;
      s.reserve(labels.size());
      for (const auto& l : labels) s.push_back({l, "", "", ""});
      sentences.push_back(std::move(s));
    }
  } else if (p.has_annotations()) {
    if (p.annotations.size() != p.tokens.size())
      throw std::invalid_argument("match_constructions: passage '" + p.id +
                                  "' has misaligned annotations");
    for (const auto& [lo, hi] : sentence_ranges(p)) {
      std::vector<SlotView> s;
      for (std::size_t i = lo; i < hi && i < p.tokens.size(); ++i) {
        const auto& a = p.annotations[i];
        s.push_back({a.deprel, a.upos, p.tokens[i], a.lemma});
      }
      sentences.push_back(std::move(s));
    }
  } else {
    throw std::invalid_argument("match_constructions: passage '" + p.id +
                                "' carries neither ground-truth templates "
                                "nor dependency annotations");
  }
  return sentences;
}

}  // namespace detail

struct ConstructionCounts {
  std::map<std::string, long long> counts;  // every inventory name present
  long long sentences_total = 0;
  long long sentences_matched = 0;
  std::string inventory_hash;
};

// Each sentence contributes one count to every construction whose pattern
// matches it; overlapping matches are intended (e.g. a question that is
// also transitive).
inline ConstructionCounts match_constructions(
    const Corpus& corpus, const ConstructionInventory& inv) {
  ConstructionCounts out;
  out.inventory_hash = inv.version_hash;
  for (const auto& e : inv.entries) out.counts[e.name] = 0;
  for (const auto& p : corpus.passages) {
    for (const auto& sent : detail::sentence_slot_views(p)) {
      bool any = false;
      for (const auto& e : inv.entries)
        if (detail::pattern_matches(e.pattern, sent)) {
          ++out.counts[e.name];
          any = true;
        }
      ++out.sentences_total;
      if (any) ++out.sentences_matched;
    }
  }
  return out;
}

// ------------------------------------------------------------- diversity ---

namespace detail {

inline double entropy_bits(const std::vector<long long>& counts) {
  long long tot = 0;
  for (long long c : counts) tot += c;
  if (tot <= 0) return 0.0;
  double h = 0.0;
  for (long long c : counts)
    if (c > 0) {
      const double p = double(c) / double(tot);
      h -= p * std::log2(p);
    }
  return h;
}

}  // namespace detail

struct DiversityReport {
  double overall_bits = 0.0;
  // Within-quartile entropies, renormalized inside each quartile;
  // [0] = Q1 (rarest) ... [3] = Q4 (most frequent).
  std::array<double, 4> quartile_bits{};
  std::map<std::string, long long> counts;
  // 100 * overall / seed-overall when a baseline report was supplied.
  std::optional<double> normalized_pct;
};

inline DiversityReport construction_diversity(
    const std::map<std::string, long long>& counts,
    const QuartileDecomposition& quartiles) {
  long long total = 0;
  for (const auto& [name, c] : counts) {
    if (c < 0)
      throw std::invalid_argument("construction_diversity: negative count for '" +
                                  name + "'");
    if (c > 0 && quartiles.quartile_of(name) < 0)
      throw std::invalid_argument("construction_diversity: '" + name +
                                  "' missing from the quartile assignment");
    total += c;
  }
  if (total <= 0)
    throw std::invalid_argument("construction_diversity: no matches");
  DiversityReport rep;
  rep.counts = counts;
  std::vector<long long> all;
  all.reserve(counts.size());
  for (const auto& [name, c] : counts) all.push_back(c);
  rep.overall_bits = detail::entropy_bits(all);
  for (int q = 0; q < 4; ++q) {
    std::vector<long long> qc;
    for (const auto& m : quartiles.members[q]) {
      const auto it = counts.find(m);
      if (it != counts.end()) qc.push_back(it->second);
    }
    rep.quartile_bits[q] = detail::entropy_bits(qc);
  }
  return rep;
}

inline DiversityReport construction_diversity(
    const std::map<std::string, long long>& counts,
    const QuartileDecomposition& quartiles, const DiversityReport& seed) {
  if (!(seed.overall_bits > 0.0))
    throw std::invalid_argument(
        "construction_diversity: baseline report has zero entropy");
  DiversityReport rep = construction_diversity(counts, quartiles);
  rep.normalized_pct = 100.0 * rep.overall_bits / seed.overall_bits;
  return rep;
}

inline DiversityReport construction_diversity(
    const ConstructionCounts& counts, const QuartileDecomposition& quartiles) {
  return construction_diversity(counts.counts, quartiles);
}

// Quartile assignment by seed type-frequency, fixed across generations.
inline QuartileDecomposition seed_frequency_quartiles(
    const ConstructionInventory& inv) {
  std::map<std::string, long long> m;
  for (const auto& e : inv.entries) m[e.name] = e.seed_freq;
  return quartile_split(m);
}

// -------------------------------------------------------------- survival ---

// Per-construction normalized entropy (or any non-negative resilience
// measure) per generation, index 0 = seed.
using EntropyTrajectories = std::map<std::string, std::vector<double>>;

struct EntrenchmentReport {
  std::map<std::string, int> survival;
  // Correlations of survival generation against log seed type-frequency.
  std::optional<double> pearson_r;
  std::optional<double> spearman_rho;
  std::map<std::string, double> category_mean_survival;
  std::vector<std::string> warnings;
  int generations = 0;      // G
  double retention = 0.5;   // fraction of the seed value that must survive
};

// Last generation at which the trajectory exceeds retention * seed value.
// The maximum qualifying index is reported even after an interim dip.
inline int survival_generation(const std::vector<double>& traj,
                               double retention) {
  const double cut = retention * traj.front();
  int last = 0;
  for (std::size_t g = 0; g < traj.size(); ++g)
    if (traj[g] > cut) last = int(g);
  return last;
}

inline EntrenchmentReport survival_analysis(
    const EntropyTrajectories& trajectories, const ConstructionInventory& inv,
    double retention = 0.5) {
  if (trajectories.empty())
    throw std::invalid_argument("survival_analysis: no trajectories");
  if (!(retention > 0.0 && retention < 1.0))
    throw std::invalid_argument("survival_analysis: retention must be in (0,1)");
  std::size_t len = 0;
  for (const auto& [name, tr] : trajectories) {
    if (!inv.find(name))
      throw std::invalid_argument("survival_analysis: construction '" + name +
                                  "' is not in the inventory");
    if (tr.empty())
      throw std::invalid_argument("survival_analysis: empty trajectory for '" +
                                  name + "'");
    if (len == 0)
      len = tr.size();
    else if (tr.size() != len)
      throw std::invalid_argument(
          "survival_analysis: trajectories must all cover generations 0..G");
  }

  EntrenchmentReport rep;
  rep.generations = int(len) - 1;
  rep.retention = retention;
  std::map<std::string, std::vector<double>> by_category;
  std::vector<double> log_freq, surv;
  for (const auto& [name, tr] : trajectories) {
    if (!(tr.front() > 0.0)) {
      rep.warnings.push_back("excluded (absent at generation 0): " + name);
      continue;
    }
    const int s = survival_generation(tr, retention);
    rep.survival[name] = s;
    const ConstructionEntry* e = inv.find(name);
    by_category[category_name(e->category)].push_back(double(s));
    if (e->seed_freq > 0) {
      log_freq.push_back(std::log(double(e->seed_freq)));
      surv.push_back(double(s));
    } else {
      rep.warnings.push_back(
          "excluded from correlation (seed type-frequency 0): " + name);
    }
  }
  for (const auto& [cat, xs] : by_category)
    rep.category_mean_survival[cat] = mean_of(xs);
  if (log_freq.size() >= 3) {
    try {
      rep.pearson_r = pearson_r(log_freq, surv);
      rep.spearman_rho = spearman_rho(log_freq, surv);
    } catch (const std::exception&) {
      rep.warnings.push_back(
          "correlation undefined (degenerate survival or frequency spread)");
    }
  }
  return rep;
}

}  // namespace itlab
