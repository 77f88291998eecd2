#pragma once
// Temperature + nucleus reshaping of discrete next-token distributions.
//
// Reshape rule: q_i ∝ p_i^(1/τ), computed in log space; the support is then
// truncated to the smallest probability-sorted prefix whose cumulative mass
// reaches the nucleus parameter, and renormalized. Ties in probability are
// broken by ascending index so the reshaped support is deterministic.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace itlab {

struct SamplerConfig {
  double temperature = 0.8;
  double nucleus_p = 0.95;
  int max_tokens = 200;    // continuation length cap
  int prompt_tokens = 50;  // prompt slice used by chain drivers
};

inline void validate_sampler_config(const SamplerConfig& cfg) {
  if (!(cfg.temperature > 0.0))
    throw std::invalid_argument("sampler: temperature must be > 0");
  if (!(cfg.nucleus_p > 0.0) || cfg.nucleus_p > 1.0)
    throw std::invalid_argument("sampler: nucleus p must be in (0, 1]");
  if (cfg.max_tokens < 1)
    throw std::invalid_argument("sampler: max_tokens must be >= 1");
  if (cfg.prompt_tokens < 1)
    throw std::invalid_argument("sampler: prompt_tokens must be >= 1");
}

// Reshape non-negative weights (any positive total; normalized internally).
// Returns (index, probability) pairs sorted by descending probability,
// restricted to the truncated support; probabilities sum to 1.
inline std::vector<std::pair<std::size_t, double>> reshape_distribution(
    const std::vector<double>& weights, double temperature, double nucleus_p) {
  if (!(temperature > 0.0))
    throw std::invalid_argument("reshape: temperature must be > 0");
  if (!(nucleus_p > 0.0) || nucleus_p > 1.0)
    throw std::invalid_argument("reshape: nucleus p must be in (0, 1]");
  if (weights.empty()) throw std::invalid_argument("reshape: empty weights");

  std::vector<std::pair<std::size_t, double>> logs;  // (index, log w / τ)
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double w = weights[i];
    if (w < 0.0) throw std::invalid_argument("reshape: negative weight");
    if (w > 0.0) logs.emplace_back(i, std::log(w) / temperature);
  }
  if (logs.empty())
    throw std::invalid_argument("reshape: all weights are zero");

  double m = logs.front().second;
  for (const auto& [i, l] : logs) m = std::max(m, l);
  double z = 0.0;
  for (auto& [i, l] : logs) {
    l = std::exp(l - m);
    z += l;
  }
  for (auto& [i, l] : logs) l /= z;

  std::sort(logs.begin(), logs.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::size_t keep = logs.size();
  double cum = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    cum += logs[i].second;
    if (cum >= nucleus_p) {
      keep = i + 1;
      break;
    }
  }
  logs.resize(keep);
  double mass = 0.0;
  for (const auto& [i, p] : logs) mass += p;
  for (auto& [i, p] : logs) p /= mass;
  return logs;
}

inline double distribution_entropy_bits(
    const std::vector<std::pair<std::size_t, double>>& dist) {
  double h = 0.0;
  for (const auto& [i, p] : dist)
    if (p > 0.0) h -= p * std::log2(p);
  return h;
}

}  // namespace itlab
