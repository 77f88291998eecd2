#pragma once
// Morphological regularity: paradigm tables (lemma -> regular past +
// attested irregular forms), the regular-fraction score over
// inflection-demanding contexts, and the log-linear regularization
// gradient fit.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "itlab/corpus.hpp"

namespace itlab {

struct ParadigmEntry {
  std::string lemma;
  std::string regular;                  // regular-rule past form
  std::vector<std::string> irregulars;  // attested irregular forms
  std::string freq_class;
};

struct ParadigmTable {
  std::vector<ParadigmEntry> entries;
  std::map<std::string, std::size_t> by_lemma;
  // surface form -> (lemma index, is_regular)
  std::map<std::string, std::pair<std::size_t, bool>> by_form;

  std::set<std::string> lemmas() const {
    std::set<std::string> out;
    for (const auto& e : entries) out.insert(e.lemma);
    return out;
  }
};

inline ParadigmTable parse_paradigm(const std::string& text) {
  ParadigmTable t;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i)
      if (i == line.size() || line[i] == '\t') {
        cols.push_back(line.substr(start, i - start));
        start = i + 1;
      }
    if (lineno == 1 && cols.size() >= 2 && cols[0] == "lemma") continue;
    if (cols.size() != 4)
      throw std::invalid_argument("paradigm line " + std::to_string(lineno) +
                                  ": expected 4 tab-separated columns");
    ParadigmEntry e;
    e.lemma = cols[0];
    e.regular = cols[1];
    e.freq_class = cols[3];
    std::istringstream irr(cols[2]);
    std::string form;
    while (std::getline(irr, form, ';'))
      if (!form.empty()) e.irregulars.push_back(form);
    if (e.lemma.empty() || e.regular.empty())
      throw std::invalid_argument("paradigm line " + std::to_string(lineno) +
                                  ": lemma and regular form are required");
    if (!t.by_lemma.emplace(e.lemma, t.entries.size()).second)
      throw std::invalid_argument("paradigm: duplicate lemma '" + e.lemma +
                                  "'");
    t.entries.push_back(e);
  }
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    const auto& e = t.entries[i];
    if (!t.by_form.emplace(e.regular, std::make_pair(i, true)).second)
      throw std::invalid_argument("paradigm: form '" + e.regular +
                                  "' maps to two lemmas");
    for (const auto& f : e.irregulars)
      if (!t.by_form.emplace(f, std::make_pair(i, false)).second)
        throw std::invalid_argument("paradigm: form '" + f +
                                    "' maps to two lemmas");
  }
  return t;
}

inline ParadigmTable load_paradigm_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is)
    throw std::invalid_argument("paradigm: cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_paradigm(ss.str());
}

struct ItemVerdict {
  std::string item;
  std::string expected_regular;
  std::map<std::string, long long> observed;  // surface form -> count
  double regular_fraction = 0.0;
};

struct RegularityScore {
  double rho = 0.0;  // mean per-item regular fraction
  std::vector<ItemVerdict> verdicts;
  std::string language;
};

// A token position demands inflection when an earlier token in the same
// sentence is a trigger cue (e.g. a past-time adverb). Sentences come from
// the passage's recorded spans, else from splitting after . ? ! tokens.
inline RegularityScore morph_regularity(
    const Corpus& corpus, const ParadigmTable& paradigm,
    const std::set<std::string>& controlled,
    const std::set<std::string>& triggers = {"yesterday"},
    const std::string& language = "en") {
  if (controlled.empty())
    throw std::invalid_argument("morph_regularity: controlled set is empty");
  if (triggers.empty())
    throw std::invalid_argument("morph_regularity: trigger set is empty");

  struct Tally {
    long long regular = 0, irregular = 0;
    std::map<std::string, long long> observed;
  };
  std::map<std::string, Tally> tallies;
  static const std::set<std::string> kEnders = {".", "?", "!"};

  for (const auto& p : corpus.passages) {
    std::vector<std::pair<std::size_t, std::size_t>> spans = p.sentence_spans;
    if (spans.empty()) {
      std::size_t begin = 0;
      for (std::size_t i = 0; i < p.tokens.size(); ++i)
        if (kEnders.count(p.tokens[i])) {
          spans.emplace_back(begin, i + 1);
          begin = i + 1;
        }
      if (begin < p.tokens.size()) spans.emplace_back(begin, p.tokens.size());
    }
    for (const auto& [lo, hi] : spans) {
      bool armed = false;
      for (std::size_t i = lo; i < hi && i < p.tokens.size(); ++i) {
        const auto& tok = p.tokens[i];
        if (armed) {
          auto hit = paradigm.by_form.find(tok);
          if (hit != paradigm.by_form.end()) {
            const auto& entry = paradigm.entries[hit->second.first];
            if (controlled.count(entry.lemma)) {
              auto& t = tallies[entry.lemma];
              (hit->second.second ? t.regular : t.irregular)++;
              t.observed[tok]++;
            }
          }
        }
        if (triggers.count(tok)) armed = true;
      }
    }
  }

  if (tallies.empty())
    throw std::runtime_error(
        "morph_regularity: coverage = 0 (no controlled-set item occurs in an "
        "inflection-demanding context)");

  RegularityScore score;
  score.language = language;
  double sum = 0.0;
  for (const auto& [lemma, t] : tallies) {
    ItemVerdict v;
    v.item = lemma;
    v.expected_regular = paradigm.entries[paradigm.by_lemma.at(lemma)].regular;
    v.observed = t.observed;
    v.regular_fraction =
        double(t.regular) / double(t.regular + t.irregular);
    sum += v.regular_fraction;
    score.verdicts.push_back(std::move(v));
  }
  score.rho = sum / double(score.verdicts.size());
  return score;
}

inline RegularityScore morph_regularity(const Corpus& corpus,
                                        const ParadigmTable& paradigm) {
  return morph_regularity(corpus, paradigm, paradigm.lemmas());
}

// ------------------------------------------------- regularization gradient ---

struct GradientFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::vector<std::pair<double, double>> points;  // (log10 freq, preference %)
};

inline GradientFit fit_regularization_gradient(
    const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3)
    throw std::invalid_argument(
        "fit_regularization_gradient: need at least 3 points");
  const double n = double(points.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : points) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : points) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx <= 0.0)
    throw std::invalid_argument(
        "fit_regularization_gradient: zero variance in x");
  GradientFit fit;
  fit.points = points;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  // flat data is fit perfectly by the constant line
  fit.r_squared = (syy <= 0.0) ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

}  // namespace itlab
