#pragma once
// The three transmission-filter conditions — none, random, quality — plus the
// surrogate quality scorer: length-normalized reference likelihood and cloze
// recoverability, aggregated per a declared rule (mean by default). Random
// and quality retain the same ceil(fraction*n) passage count, so comparing
// them isolates the selection criterion from the data volume.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "corpus.hpp"
#include "csv.hpp"
#include "ngram.hpp"
#include "rng.hpp"

namespace itlab {

enum class FilterCondition { none, random, quality };

struct QualityScore {
  std::string passage_id;
  double score = 0.0;
  std::map<std::string, double> components;
};

enum class ScoreAggregation { mean, min, max };

inline double aggregate_components(
    const std::map<std::string, double>& components, ScoreAggregation agg) {
  if (components.empty())
    throw std::invalid_argument("filters: no score components to aggregate");
  double acc = agg == ScoreAggregation::mean ? 0.0
               : agg == ScoreAggregation::min
                   ? std::numeric_limits<double>::infinity()
                   : -std::numeric_limits<double>::infinity();
  for (const auto& [name, v] : components) {
    switch (agg) {
      case ScoreAggregation::mean: acc += v; break;
      case ScoreAggregation::min: acc = std::min(acc, v); break;
      case ScoreAggregation::max: acc = std::max(acc, v); break;
    }
  }
  if (agg == ScoreAggregation::mean) acc /= double(components.size());
  return acc;
}

using PassageScorer = std::function<QualityScore(const Passage&)>;

struct FilterSpec {
  FilterCondition condition = FilterCondition::none;
  double retain_fraction = 0.7;
  PassageScorer scorer;  // required iff condition == quality
};

inline void validate_filter_spec(const FilterSpec& spec) {
  if (!(spec.retain_fraction > 0.0) || spec.retain_fraction > 1.0)
    throw std::invalid_argument("filters: retain fraction must be in (0, 1]");
  if (spec.condition == FilterCondition::quality && !spec.scorer)
    throw std::invalid_argument(
        "filters: quality condition requires a scorer");
}

namespace detail {

// ceil(fraction * n), guarded against the fraction*n float product landing
// epsilon above an exact integer (e.g. 0.7 * 10).
inline std::size_t retained_count(std::size_t n, double fraction) {
  const double product = fraction * double(n);
  if (product < 1.0 - 1e-9)
    throw std::invalid_argument(
        "filters: corpus size times retain fraction must be >= 1");
  return std::size_t(std::ceil(product - 1e-9));
}

inline std::string fmt10(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace detail

// Filter one generation's sampled corpus down to the retained passages,
// preserving their original order. Deterministic given (corpus, spec, rng).
inline Corpus apply_filter(const Corpus& corpus, const FilterSpec& spec,
                           Rng& rng) {
  validate_corpus(corpus);
  validate_filter_spec(spec);
  if (spec.condition == FilterCondition::none) return corpus;

  const std::size_t n = corpus.passages.size();
  const std::size_t m = detail::retained_count(n, spec.retain_fraction);

  std::vector<std::size_t> keep;
  if (spec.condition == FilterCondition::random) {
    keep = rng.choose_without_replacement(n, m);  // ascending
  } else {
    std::vector<std::pair<std::size_t, QualityScore>> scored;
    scored.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
      scored.emplace_back(i, spec.scorer(corpus.passages[i]));
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.second.score != b.second.score)
        return a.second.score > b.second.score;
      return a.second.passage_id < b.second.passage_id;
    });
    keep.reserve(m);
    for (std::size_t r = 0; r < m; ++r) keep.push_back(scored[r].first);
    std::sort(keep.begin(), keep.end());  // back to corpus order
  }

  Corpus out;
  out.passages.reserve(m);
  for (std::size_t i : keep) out.passages.push_back(corpus.passages[i]);
  return out;
}

// Per-token log-likelihood of the passage under a reference learner,
// length-normalized so long passages aren't penalized for length alone.
inline QualityScore reference_likelihood_score(const Passage& p,
                                               const NGramLearner& reference) {
  const SequenceScore s = sequence_score(reference, p.tokens);
  QualityScore q;
  q.passage_id = p.id;
  q.score = s.log_prob / double(s.scored_tokens);
  q.components["reference_likelihood"] = q.score;
  return q;
}

struct ClozeSpec {
  int deletions = 3;  // interior tokens deleted per passage
  int top_n = 5;      // reference predictions counted as a recovery
};

// Cloze recoverability: delete `deletions` evenly spaced interior tokens and
// score the fraction the reference ranks in its top-n next-token predictions
// given the true left context. Deterministic — no rng involved.
inline QualityScore recoverability_score(const Passage& p,
                                         const ClozeSpec& probe,
                                         const NGramLearner& reference) {
  if (probe.deletions < 1)
    throw std::invalid_argument("filters: cloze deletions must be >= 1");
  if (probe.top_n < 1)
    throw std::invalid_argument("filters: cloze top-n must be >= 1");
  if (!reference.fitted())
    throw std::invalid_argument("ngram: learner not fitted");
  const std::size_t len = p.tokens.size();
  const std::size_t k = std::size_t(probe.deletions);
  if (len < k + 2)
    throw std::invalid_argument("filters: passage '" + p.id +
                                "' shorter than deletions + 2 tokens");

  const std::size_t interior = len - 2;  // positions 1 .. len-2
  std::size_t recovered = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t pos = 1 + (i * interior) / k;
    const std::vector<std::string> context(p.tokens.begin(),
                                           p.tokens.begin() +
                                               std::ptrdiff_t(pos));
    const std::string& truth = p.tokens[pos];
    const double p_truth = next_probability(reference, context, truth);
    // Rank among the vocabulary by (probability desc, token asc).
    std::size_t rank = 0;
    for (const auto& tok : reference.vocab) {
      if (tok == truth) continue;
      const double q = next_probability(reference, context, tok);
      if (q > p_truth || (q == p_truth && tok < truth)) ++rank;
    }
    if (rank < std::size_t(probe.top_n)) ++recovered;
  }
  QualityScore q;
  q.passage_id = p.id;
  q.score = double(recovered) / double(k);
  q.components["recoverability"] = q.score;
  return q;
}

// The default quality signal: both surrogate components under one reference,
// aggregated per `agg`. The reference is captured by value; scorers outlive
// the learner they were built from.
inline PassageScorer surrogate_scorer(NGramLearner reference,
                                      ClozeSpec probe = {},
                                      ScoreAggregation agg =
                                          ScoreAggregation::mean) {
  return [reference = std::move(reference), probe, agg](const Passage& p) {
    QualityScore q;
    q.passage_id = p.id;
    q.components["reference_likelihood"] =
        reference_likelihood_score(p, reference).score;
    q.components["recoverability"] =
        recoverability_score(p, probe, reference).score;
    q.score = aggregate_components(q.components, agg);
    return q;
  };
}

// Audit export: passage id, total, then one column per component name (the
// union across rows, sorted); absent components are empty fields.
inline csv::Table scores_table(const std::vector<QualityScore>& scores) {
  std::vector<std::string> names;
  for (const auto& s : scores)
    for (const auto& [name, v] : s.components) names.push_back(name);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());

  csv::Table t;
  t.header = {"passage", "total"};
  t.header.insert(t.header.end(), names.begin(), names.end());
  for (const auto& s : scores) {
    std::vector<std::string> row = {s.passage_id, detail::fmt10(s.score)};
    for (const auto& name : names) {
      const auto it = s.components.find(name);
      row.push_back(it == s.components.end() ? "" : detail::fmt10(it->second));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline void write_scores_csv(const std::string& path,
                             const std::vector<QualityScore>& scores) {
  csv::write_table_file(path, scores_table(scores));
}

}  // namespace itlab
