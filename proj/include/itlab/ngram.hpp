#pragma once
// Count-based n-gram learner with add-k smoothing and temperature/nucleus
// sampling. Retraining is fresh-base by construction: fit_ngram only ever
// reads the template's immutable base counts, so a generation's learner is a
// pure function of (base template, that generation's corpus).
//
// Conventions: contexts are left-padded with the pseudo-token "<s>", which is
// never part of the vocabulary, so the first tokens of a passage condition on
// start-of-passage contexts. There is no end token: generated passage length
// is governed by the sampler's max_tokens cap.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "rng.hpp"
#include "sampler.hpp"

namespace itlab {

inline constexpr const char* kBosToken = "<s>";

struct NGramCounts {
  // context key (window tokens joined by '\x1f') -> successor -> count
  std::map<std::string, std::map<std::string, long long>> table;

  bool empty() const { return table.empty(); }
  bool operator==(const NGramCounts& o) const { return table == o.table; }
};

struct NGramLearner {
  int order = 3;
  double add_k = 0.01;
  NGramCounts base_counts;  // fresh-base state; fit_ngram reads only this
  NGramCounts counts;       // base_counts + fitted corpus
  // Derived after fitting: sorted successor types and per-context totals.
  std::vector<std::string> vocab;
  std::map<std::string, long long> context_totals;

  bool fitted() const { return !vocab.empty(); }
};

inline NGramLearner make_ngram_template(int order = 3, double add_k = 0.01) {
  if (order < 1) throw std::invalid_argument("ngram: order must be >= 1");
  if (add_k < 0.0) throw std::invalid_argument("ngram: add-k must be >= 0");
  NGramLearner l;
  l.order = order;
  l.add_k = add_k;
  return l;
}

namespace detail {

inline constexpr char kCtxSep = '\x1f';

inline std::string context_key(const std::vector<std::string>& window) {
  std::string key;
  for (std::size_t i = 0; i < window.size(); ++i) {
    if (i) key += kCtxSep;
    key += window[i];
  }
  return key;
}

inline std::string readable_context(const std::string& key) {
  std::string s = key;
  std::replace(s.begin(), s.end(), kCtxSep, ' ');
  return s;
}

// Window of the last order-1 tokens of `recent`, left-padded with BOS.
inline std::vector<std::string> context_window(
    int order, const std::vector<std::string>& recent) {
  const std::size_t n = std::size_t(order - 1);
  const std::size_t take = std::min(recent.size(), n);
  std::vector<std::string> w;
  w.reserve(n);
  for (std::size_t i = take; i < n; ++i) w.push_back(kBosToken);
  w.insert(w.end(), recent.end() - std::ptrdiff_t(take), recent.end());
  return w;
}

inline void accumulate_passage(NGramCounts& counts, int order,
                               const std::vector<std::string>& tokens) {
  std::vector<std::string> padded;
  padded.reserve(tokens.size() + std::size_t(order) - 1);
  for (int i = 0; i + 1 < order; ++i) padded.push_back(kBosToken);
  padded.insert(padded.end(), tokens.begin(), tokens.end());
  std::vector<std::string> window;
  for (std::size_t i = std::size_t(order - 1); i < padded.size(); ++i) {
    window.assign(padded.begin() + std::ptrdiff_t(i) - (order - 1),
                  padded.begin() + std::ptrdiff_t(i));
    ++counts.table[context_key(window)][padded[i]];
  }
}

inline void finalize_ngram(NGramLearner& l) {
  l.context_totals.clear();
  std::map<std::string, long long> seen_types;
  for (const auto& [ctx, succ] : l.counts.table) {
    long long total = 0;
    for (const auto& [tok, c] : succ) {
      if (c < 0) throw std::invalid_argument("ngram: negative count");
      total += c;
      seen_types[tok] = 1;
    }
    l.context_totals[ctx] = total;
  }
  l.vocab.clear();
  l.vocab.reserve(seen_types.size());
  for (const auto& [tok, one] : seen_types) l.vocab.push_back(tok);
}

}  // namespace detail

// Fit a learner on one generation's corpus. Reads only tmpl.base_counts (the
// fresh-base rule): the result never depends on any previously fitted state.
inline NGramLearner fit_ngram(const NGramLearner& tmpl, const Corpus& corpus) {
  if (tmpl.order < 1) throw std::invalid_argument("ngram: order must be >= 1");
  if (tmpl.add_k < 0.0) throw std::invalid_argument("ngram: add-k must be >= 0");
  validate_corpus(corpus);
  NGramLearner l;
  l.order = tmpl.order;
  l.add_k = tmpl.add_k;
  l.base_counts = tmpl.base_counts;
  l.counts = tmpl.base_counts;
  for (const auto& p : corpus.passages)
    detail::accumulate_passage(l.counts, l.order, p.tokens);
  detail::finalize_ngram(l);
  return l;
}

// Smoothed probability of `token` after `recent`. Unknown tokens score as an
// unseen type: k / (total + k|V|). A context with no observations is uniform
// under k > 0 and an error under k = 0.
inline double next_probability(const NGramLearner& l,
                               const std::vector<std::string>& recent,
                               const std::string& token) {
  if (!l.fitted()) throw std::invalid_argument("ngram: learner not fitted");
  const std::string key =
      detail::context_key(detail::context_window(l.order, recent));
  const auto it = l.counts.table.find(key);
  const double v = double(l.vocab.size());
  if (it == l.counts.table.end()) {
    if (l.add_k == 0.0)
      throw std::runtime_error("ngram: unseen context '" +
                               detail::readable_context(key) +
                               "' with add-k smoothing 0");
    return 1.0 / v;
  }
  const double total = double(l.context_totals.at(key));
  long long c = 0;
  const auto jt = it->second.find(token);
  if (jt != it->second.end()) c = jt->second;
  return (double(c) + l.add_k) / (total + l.add_k * v);
}

struct SequenceScore {
  double log_prob = 0.0;          // natural log over every token
  std::size_t scored_tokens = 0;  // == tokens.size()
};

inline SequenceScore sequence_score(const NGramLearner& l,
                                    const std::vector<std::string>& tokens) {
  if (!l.fitted()) throw std::invalid_argument("ngram: learner not fitted");
  if (tokens.empty())
    throw std::invalid_argument("ngram: cannot score an empty sequence");
  SequenceScore s;
  std::vector<std::string> recent;
  recent.reserve(tokens.size());
  auto score_one = [&](const std::string& tok) {
    const double p = next_probability(l, recent, tok);
    if (p <= 0.0)
      throw std::runtime_error("ngram: zero probability for token '" + tok +
                               "' (add-k smoothing 0)");
    s.log_prob += std::log(p);
    ++s.scored_tokens;
  };
  for (const auto& tok : tokens) {
    score_one(tok);
    recent.push_back(tok);
  }
  return s;
}

// ------------------------------------------------------- cached sampling ---
//
// The smoothed next-token distribution has two tiers: tokens seen after the
// context (individual counts) and the uniform unseen remainder. Reshaping by
// q ∝ p^(1/τ) preserves the tiers, so the nucleus support is a descending
// prefix of seen tokens, possibly followed by the first j unseen vocabulary
// indices in ascending order (the deterministic tie-break). Sampling then
// needs one uniform draw: binary search within the seen prefix, or an
// order-statistic skip over seen indices to select the j-th unseen token.

namespace detail {

struct ContextDist {
  std::vector<std::size_t> seen_idx;  // in-support seen tokens, weight desc
  std::vector<double> seen_cum;       // cumulative reshaped mass over seen_idx
  std::vector<std::size_t> seen_all;  // every seen successor index, ascending
  std::size_t unseen_in_support = 0;
  double unseen_w = 0.0;    // reshaped mass of each in-support unseen token
  double support_mass = 0.0;
};

inline ContextDist build_context_dist(const NGramLearner& l,
                                      const std::string& key,
                                      double temperature, double nucleus_p) {
  const auto it = l.counts.table.find(key);
  if (it == l.counts.table.end() && l.add_k == 0.0)
    throw std::runtime_error("ngram: unseen context '" + readable_context(key) +
                             "' with add-k smoothing 0");
  // Raw weights; normalization cancels in the reshape, so use (c + k) direct.
  std::vector<std::pair<std::size_t, double>> seen;  // (vocab idx, log w / τ)
  if (it != l.counts.table.end()) {
    seen.reserve(it->second.size());
    for (const auto& [tok, c] : it->second) {
      if (c == 0 && l.add_k == 0.0) continue;
      const auto vi = std::lower_bound(l.vocab.begin(), l.vocab.end(), tok);
      seen.emplace_back(std::size_t(vi - l.vocab.begin()),
                        std::log(double(c) + l.add_k) / temperature);
    }
  }
  const std::size_t n_unseen = l.vocab.size() - seen.size();
  const bool has_unseen_tier = l.add_k > 0.0 && n_unseen > 0;

  double max_log = has_unseen_tier ? std::log(l.add_k) / temperature
                                   : -std::numeric_limits<double>::infinity();
  for (const auto& [i, lw] : seen) max_log = std::max(max_log, lw);

  ContextDist d;
  d.seen_all.reserve(seen.size());
  for (const auto& [i, lw] : seen) d.seen_all.push_back(i);
  std::sort(d.seen_all.begin(), d.seen_all.end());

  std::vector<std::pair<std::size_t, double>> ranked = std::move(seen);
  for (auto& [i, lw] : ranked) lw = std::exp(lw - max_log);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const double uw =
      has_unseen_tier ? std::exp(std::log(l.add_k) / temperature - max_log)
                      : 0.0;
  double z = double(n_unseen) * uw;
  for (const auto& [i, w] : ranked) z += w;
  if (!(z > 0.0))
    throw std::runtime_error("ngram: degenerate context distribution");

  // nucleus 1 keeps the whole support exactly; accumulated rounding must not
  // drop the tail tokens.
  const double target = nucleus_p * z;
  double cum = 0.0;
  std::size_t keep_seen = ranked.size();
  bool cut_in_seen = false;
  if (nucleus_p < 1.0) {
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      cum += ranked[i].second;
      if (cum >= target) {
        keep_seen = i + 1;
        cut_in_seen = true;
        break;
      }
    }
  }
  d.seen_idx.reserve(keep_seen);
  d.seen_cum.reserve(keep_seen);
  double run = 0.0;
  for (std::size_t i = 0; i < keep_seen; ++i) {
    run += ranked[i].second;
    d.seen_idx.push_back(ranked[i].first);
    d.seen_cum.push_back(run);
  }
  if (!cut_in_seen && n_unseen > 0) {
    if (nucleus_p >= 1.0) {
      d.unseen_in_support = has_unseen_tier ? n_unseen : 0;
    } else if (uw > 0.0) {
      const double need = target - run;
      double j = std::ceil(need / uw);
      if (!(j >= 1.0)) j = 1.0;
      d.unseen_in_support = std::min(n_unseen, std::size_t(j));
    } else {
      d.unseen_in_support = 0;  // tail carries no mass; keep support seen-only
    }
    d.unseen_w = uw;
  }
  d.support_mass = run + double(d.unseen_in_support) * d.unseen_w;
  if (!(d.support_mass > 0.0))
    throw std::runtime_error("ngram: empty sampling support");
  return d;
}

// The t-th (0-based) vocabulary index not present in seen_all (ascending).
inline std::size_t complement_index(const std::vector<std::size_t>& seen_all,
                                    std::size_t t) {
  std::size_t candidate = t;
  for (std::size_t s : seen_all) {
    if (s <= candidate)
      ++candidate;
    else
      break;
  }
  return candidate;
}

inline std::size_t pick_from(const ContextDist& d, Rng& rng) {
  const double x = rng.uniform01() * d.support_mass;
  const double seen_mass = d.seen_cum.empty() ? 0.0 : d.seen_cum.back();
  if (x < seen_mass || d.unseen_in_support == 0) {
    const auto it =
        std::upper_bound(d.seen_cum.begin(), d.seen_cum.end(), x);
    const std::size_t i = std::min(
        std::size_t(it - d.seen_cum.begin()), d.seen_idx.size() - 1);
    return d.seen_idx[i];
  }
  std::size_t t = std::size_t((x - seen_mass) / d.unseen_w);
  t = std::min(t, d.unseen_in_support - 1);
  return complement_index(d.seen_all, t);
}

}  // namespace detail

// Owned by the caller (one per chain/thread); learners stay immutable.
// Entries are valid for one (temperature, nucleus) setting and rebuild on
// mismatch. Cached and uncached sampling run the identical code path.
struct SamplerCache {
  double temperature = -1.0;
  double nucleus_p = -1.0;
  std::map<std::string, detail::ContextDist> entries;
};

inline std::string sample_next_token(const NGramLearner& l,
                                     const std::vector<std::string>& recent,
                                     const SamplerConfig& cfg, Rng& rng,
                                     SamplerCache* cache = nullptr) {
  if (!l.fitted()) throw std::invalid_argument("ngram: learner not fitted");
  validate_sampler_config(cfg);
  const std::string key =
      detail::context_key(detail::context_window(l.order, recent));
  if (cache) {
    if (cache->temperature != cfg.temperature ||
        cache->nucleus_p != cfg.nucleus_p) {
      cache->entries.clear();
      cache->temperature = cfg.temperature;
      cache->nucleus_p = cfg.nucleus_p;
    }
    auto it = cache->entries.find(key);
    if (it == cache->entries.end())
      it = cache->entries
               .emplace(key, detail::build_context_dist(
                                 l, key, cfg.temperature, cfg.nucleus_p))
               .first;
    return l.vocab[detail::pick_from(it->second, rng)];
  }
  const auto d =
      detail::build_context_dist(l, key, cfg.temperature, cfg.nucleus_p);
  return l.vocab[detail::pick_from(d, rng)];
}

// Truncated, renormalized next-token distribution after `recent`, sorted by
// descending probability (unseen-tier ties in ascending vocabulary order).
inline std::vector<std::pair<std::string, double>> next_distribution(
    const NGramLearner& l, const std::vector<std::string>& recent,
    const SamplerConfig& cfg) {
  if (!l.fitted()) throw std::invalid_argument("ngram: learner not fitted");
  validate_sampler_config(cfg);
  const std::string key =
      detail::context_key(detail::context_window(l.order, recent));
  const auto d =
      detail::build_context_dist(l, key, cfg.temperature, cfg.nucleus_p);
  std::vector<std::pair<std::string, double>> out;
  out.reserve(d.seen_idx.size() + d.unseen_in_support);
  double prev = 0.0;
  for (std::size_t i = 0; i < d.seen_idx.size(); ++i) {
    out.emplace_back(l.vocab[d.seen_idx[i]],
                     (d.seen_cum[i] - prev) / d.support_mass);
    prev = d.seen_cum[i];
  }
  for (std::size_t t = 0; t < d.unseen_in_support; ++t)
    out.emplace_back(l.vocab[detail::complement_index(d.seen_all, t)],
                     d.unseen_w / d.support_mass);
  return out;
}

// Passage = prompt ++ sampled continuation of exactly cfg.max_tokens tokens.
inline Passage sample_continuation(const NGramLearner& l,
                                   const std::vector<std::string>& prompt,
                                   const SamplerConfig& cfg, Rng& rng,
                                   SamplerCache* cache = nullptr) {
  if (!l.fitted()) throw std::invalid_argument("ngram: learner not fitted");
  validate_sampler_config(cfg);
  if (prompt.empty())
    throw std::invalid_argument("ngram: prompt must hold >= 1 token");
  Passage p;
  p.tokens = prompt;
  std::vector<std::string> recent = prompt;
  for (int t = 0; t < cfg.max_tokens; ++t) {
    const std::string tok = sample_next_token(l, recent, cfg, rng, cache);
    p.tokens.push_back(tok);
    recent.push_back(tok);
  }
  return p;
}

}  // namespace itlab
