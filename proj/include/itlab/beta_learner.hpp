#pragma once
// Exact Beta-prior frequency learner for two-variant (regular/irregular)
// transmission chains. A generation observes k regular outcomes of N, forms
// the posterior Beta(ε+k, ε+N−k), produces a probability by its production
// rule, and transmits k' ~ Binomial(N, produced) to the next generation.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mathutil.hpp"
#include "rng.hpp"

namespace itlab {

enum class ProductionRule { posterior_sample, posterior_mean, map };

struct BetaLearnerConfig {
  double epsilon = 0.03;  // prior concentration per side
  int exposure = 10;      // N: observations per variant pair per generation
  ProductionRule rule = ProductionRule::posterior_sample;
};

inline void validate_beta_config(const BetaLearnerConfig& cfg) {
  if (!(cfg.epsilon > 0.0))
    throw std::invalid_argument("beta learner: epsilon must be > 0");
  if (cfg.exposure < 1)
    throw std::invalid_argument("beta learner: exposure N must be >= 1");
}

namespace detail {

// FNV-1a over the item name keys each item's substream, so per-item results
// are independent of item order and of other items' draws.
inline std::uint64_t item_stream_id(const std::string& name) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Mode of Beta(a, b): interior only when both shapes exceed 1; otherwise
// the density is unbounded at a boundary and the mode sits there.
inline double beta_mode(double a, double b) {
  if (a > 1.0 && b > 1.0) return (a - 1.0) / (a + b - 2.0);
  if (a <= 1.0 && b <= 1.0) return a >= b ? 1.0 : 0.0;
  return a > 1.0 ? 1.0 : 0.0;
}

}  // namespace detail

// Probability of the regular variant produced by a learner who saw k of N.
inline double produced_probability(int k, const BetaLearnerConfig& cfg,
                                   Rng& rng) {
  validate_beta_config(cfg);
  if (k < 0 || k > cfg.exposure)
    throw std::invalid_argument("beta learner: k must be in [0, N]");
  const double a = cfg.epsilon + double(k);
  const double b = cfg.epsilon + double(cfg.exposure - k);
  switch (cfg.rule) {
    case ProductionRule::posterior_sample: return rng.beta(a, b);
    case ProductionRule::posterior_mean: return a / (a + b);
    case ProductionRule::map: return detail::beta_mode(a, b);
  }
  throw std::logic_error("beta learner: bad production rule");
}

inline int beta_step(int k, const BetaLearnerConfig& cfg, Rng& rng) {
  const double p = produced_probability(k, cfg, rng);
  return rng.binomial(cfg.exposure, p);
}

// Exact one-step transition matrix over states k = 0..N. posterior_sample
// integrates to the Beta-Binomial in closed form; the deterministic rules
// reduce to a point Binomial.
inline std::vector<std::vector<double>> exact_transition_matrix(
    const BetaLearnerConfig& cfg) {
  validate_beta_config(cfg);
  const int n = cfg.exposure;
  std::vector<std::vector<double>> t(n + 1, std::vector<double>(n + 1, 0.0));
  for (int k = 0; k <= n; ++k) {
    const double a = cfg.epsilon + double(k);
    const double b = cfg.epsilon + double(n - k);
    for (int j = 0; j <= n; ++j) {
      if (cfg.rule == ProductionRule::posterior_sample) {
        t[k][j] = std::exp(log_binom(n, j) + log_beta(a + j, b + n - j) -
                           log_beta(a, b));
      } else {
        const double p = cfg.rule == ProductionRule::posterior_mean
                             ? a / (a + b)
                             : detail::beta_mode(a, b);
        if (p <= 0.0)
          t[k][j] = j == 0 ? 1.0 : 0.0;
        else if (p >= 1.0)
          t[k][j] = j == n ? 1.0 : 0.0;
        else
          t[k][j] = std::exp(log_binom(n, j) + j * std::log(p) +
                             (n - j) * std::log1p(-p));
      }
    }
  }
  return t;
}

// ------------------------------------------------------------ chain runs ---

struct BetaChainItem {
  std::string name;
  std::string freq_class;  // descriptive tag; exposure already encodes it
  int exposure = 10;       // per-item N, overriding the config
  int initial_regular = 5;  // k at generation 0
};

struct BetaChainResult {
  // proportion regular per generation 0..G, one trajectory per item
  std::map<std::string, std::vector<double>> proportion_regular;
  int generations = 0;
};

// Items evolve independently on substreams keyed by item name under one
// master draw, so per-item trajectories do not depend on item order or on
// draws made for other items.
inline BetaChainResult run_beta_chain(const BetaLearnerConfig& cfg, int G,
                                      const std::vector<BetaChainItem>& items,
                                      Rng& rng) {
  validate_beta_config(cfg);
  if (G < 1) throw std::invalid_argument("run_beta_chain: G must be >= 1");
  if (items.empty())
    throw std::invalid_argument("run_beta_chain: no items");
  const std::uint64_t master = rng.next_u64();
  BetaChainResult out;
  out.generations = G;
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& it = items[i];
    BetaLearnerConfig item_cfg = cfg;
    item_cfg.exposure = it.exposure;
    validate_beta_config(item_cfg);
    if (it.initial_regular < 0 || it.initial_regular > it.exposure)
      throw std::invalid_argument("run_beta_chain: initial k outside [0, N]");
    if (out.proportion_regular.count(it.name))
      throw std::invalid_argument("run_beta_chain: duplicate item '" +
                                  it.name + "'");
    Rng sub = Rng::derive(master, {detail::item_stream_id(it.name)});
    std::vector<double> traj;
    traj.reserve(std::size_t(G) + 1);
    int k = it.initial_regular;
    traj.push_back(double(k) / double(it.exposure));
    for (int g = 0; g < G; ++g) {
      k = beta_step(k, item_cfg, sub);
      traj.push_back(double(k) / double(it.exposure));
    }
    out.proportion_regular[it.name] = std::move(traj);
  }
  return out;
}

}  // namespace itlab
