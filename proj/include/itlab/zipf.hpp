#pragma once
// Rank-frequency spectrum fitting: discrete power-law MLE plus a
// three-family model comparison (power law / discretized lognormal /
// exponential) with AIC and Vuong-style normalized likelihood ratios.
//
// All fits operate on the rank axis of a FreqTable: rank 1 is the most
// frequent type, and the candidate densities are normalized over the
// observed rank range [x_min, R] with R = min(vocab, 10,000).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "itlab/corpus.hpp"
#include "itlab/mathutil.hpp"
#include "itlab/rng.hpp"

namespace itlab {

constexpr std::size_t kZipfMaxRanks = 10000;

struct ZipfFit {
  double alpha = 0.0;
  std::size_t x_min = 1;
  double log_likelihood = 0.0;
  std::uint64_t n_tail = 0;   // tokens at ranks >= x_min
  std::size_t n_ranks = 0;    // ranks used by the fit
};

namespace detail {

// counts by rank (descending-frequency order), restricted to [x_min, R]
struct RankTail {
  std::vector<double> ranks;   // r values
  std::vector<double> counts;  // n_r
  double total = 0.0;
};

inline RankTail rank_tail(const FreqTable& freq, std::size_t x_min) {
  if (x_min < 1) throw std::invalid_argument("fit_zipf: x_min >= 1");
  const std::size_t r_max = std::min(freq.vocab_size(), kZipfMaxRanks);
  RankTail t;
  for (std::size_t i = x_min - 1; i < r_max; ++i) {
    t.ranks.push_back(double(i + 1));
    t.counts.push_back(double(freq.items[i].second));
    t.total += double(freq.items[i].second);
  }
  if (t.ranks.size() < 10)
    throw std::invalid_argument(
        "fit_zipf: need at least 10 types above the cutoff, have " +
        std::to_string(t.ranks.size()));
  return t;
}

// log normalizer of the discrete power law over the tail
inline double powerlaw_log_z(const std::vector<double>& ranks, double alpha) {
  double z = 0.0;
  for (double r : ranks) z += std::pow(r, -alpha);
  return std::log(z);
}

// log normalizer of the discrete exponential over ranks [lo, hi]
// (geometric series in closed form, stable for any lambda > 0)
inline double exponential_log_z(double lo, double hi, double lambda) {
  const double m = hi - lo + 1.0;
  // Z = e^{-lambda lo} (1 - e^{-lambda m}) / (1 - e^{-lambda})
  return -lambda * lo + std::log1p(-std::exp(-lambda * m)) -
         std::log1p(-std::exp(-lambda));
}

}  // namespace detail

inline ZipfFit fit_zipf(const FreqTable& freq, std::size_t x_min = 1,
                        double alpha_lo = 0.1, double alpha_hi = 3.0) {
  const auto tail = detail::rank_tail(freq, x_min);
  double s_logr = 0.0;
  for (std::size_t i = 0; i < tail.ranks.size(); ++i)
    s_logr += tail.counts[i] * std::log(tail.ranks[i]);
  auto neg_ll = [&](double a) {
    return a * s_logr + tail.total * detail::powerlaw_log_z(tail.ranks, a);
  };
  const double alpha = golden_minimize(neg_ll, alpha_lo, alpha_hi, 1e-4);
  ZipfFit fit;
  fit.alpha = alpha;
  fit.x_min = x_min;
  fit.log_likelihood = -neg_ll(alpha);
  fit.n_tail = std::uint64_t(std::llround(tail.total));
  fit.n_ranks = tail.ranks.size();
  return fit;
}

// ------------------------------------------------------- model comparison ---

struct CandidateFit {
  std::string family;          // "powerlaw" | "lognormal" | "exponential"
  std::vector<double> params;  // {alpha} | {mu, sigma} | {lambda}
  double log_likelihood = 0.0;
  double aic = 0.0;
};

struct PairwiseLr {
  std::string model_a, model_b;
  double z = 0.0;            // Vuong-style normalized LR (positive favors a)
  double p_two_sided = 1.0;
};

struct ModelComparison {
  CandidateFit powerlaw, lognormal, exponential;
  std::vector<PairwiseLr> pairs;
  std::string preferred;     // family with the smallest AIC
};

inline ModelComparison compare_models(const FreqTable& freq,
                                      std::size_t x_min = 1) {
  const auto tail = detail::rank_tail(freq, x_min);
  const double n = tail.total;
  const double lo = tail.ranks.front(), hi = tail.ranks.back();

  // --- power law (1 param) ---
  const auto zf = fit_zipf(freq, x_min);
  std::vector<double> lp_pl(tail.ranks.size());
  {
    const double logz = detail::powerlaw_log_z(tail.ranks, zf.alpha);
    for (std::size_t i = 0; i < tail.ranks.size(); ++i)
      lp_pl[i] = -zf.alpha * std::log(tail.ranks[i]) - logz;
  }

  // --- discretized lognormal (2 params) ---
  // p(r) propto exp(-(ln r - mu)^2 / (2 sigma^2)) / r over the tail
  std::vector<double> logr(tail.ranks.size());
  for (std::size_t i = 0; i < tail.ranks.size(); ++i)
    logr[i] = std::log(tail.ranks[i]);
  double mu0 = 0.0;
  for (std::size_t i = 0; i < logr.size(); ++i)
    mu0 += tail.counts[i] * logr[i];
  mu0 /= n;
  double v0 = 0.0;
  for (std::size_t i = 0; i < logr.size(); ++i)
    v0 += tail.counts[i] * (logr[i] - mu0) * (logr[i] - mu0);
  const double sigma0 = std::max(std::sqrt(v0 / n), 1e-3);
  auto ln_neg_ll = [&](double mu, double log_sigma) {
    const double sigma = std::exp(log_sigma);
    double z = 0.0;
    for (double lr : logr) {
      const double d = (lr - mu) / sigma;
      z += std::exp(-0.5 * d * d - lr);
    }
    double ll = -n * std::log(z);
    for (std::size_t i = 0; i < logr.size(); ++i) {
      const double d = (logr[i] - mu) / sigma;
      ll += tail.counts[i] * (-0.5 * d * d - logr[i]);
    }
    return -ll;
  };
  const auto nm = nelder_mead_2d(ln_neg_ll, mu0, std::log(sigma0), 0.5, 1e-9);
  const double mu_hat = nm.x, sigma_hat = std::exp(nm.y);
  std::vector<double> lp_ln(tail.ranks.size());
  {
    double z = 0.0;
    for (double lr : logr) {
      const double d = (lr - mu_hat) / sigma_hat;
      z += std::exp(-0.5 * d * d - lr);
    }
    const double logz = std::log(z);
    for (std::size_t i = 0; i < logr.size(); ++i) {
      const double d = (logr[i] - mu_hat) / sigma_hat;
      lp_ln[i] = -0.5 * d * d - logr[i] - logz;
    }
  }

  // --- exponential (1 param) ---
  double s_r = 0.0;
  for (std::size_t i = 0; i < tail.ranks.size(); ++i)
    s_r += tail.counts[i] * tail.ranks[i];
  auto exp_neg_ll = [&](double lambda) {
    return lambda * s_r + n * detail::exponential_log_z(lo, hi, lambda);
  };
  const double lambda_hat = golden_minimize(exp_neg_ll, 1e-8, 5.0, 1e-8);
  std::vector<double> lp_ex(tail.ranks.size());
  {
    const double logz = detail::exponential_log_z(lo, hi, lambda_hat);
    for (std::size_t i = 0; i < tail.ranks.size(); ++i)
      lp_ex[i] = -lambda_hat * tail.ranks[i] - logz;
  }

  ModelComparison cmp;
  auto fill = [&](CandidateFit& f, std::string family,
                  std::vector<double> params,
                  const std::vector<double>& lp) {
    f.family = std::move(family);
    f.params = std::move(params);
    f.log_likelihood = 0.0;
    for (std::size_t i = 0; i < lp.size(); ++i)
      f.log_likelihood += tail.counts[i] * lp[i];
    f.aic = 2.0 * double(f.params.size()) - 2.0 * f.log_likelihood;
  };
  fill(cmp.powerlaw, "powerlaw", {zf.alpha}, lp_pl);
  fill(cmp.lognormal, "lognormal", {mu_hat, sigma_hat}, lp_ln);
  fill(cmp.exponential, "exponential", {lambda_hat}, lp_ex);

  // Vuong-style normalized LR over per-token pointwise log-likelihoods
  auto vuong = [&](const CandidateFit& a, const std::vector<double>& lpa,
                   const CandidateFit& b, const std::vector<double>& lpb) {
    double mean = 0.0;
    for (std::size_t i = 0; i < lpa.size(); ++i)
      mean += tail.counts[i] * (lpa[i] - lpb[i]);
    mean /= n;
    double var = 0.0;
    for (std::size_t i = 0; i < lpa.size(); ++i) {
      const double d = lpa[i] - lpb[i] - mean;
      var += tail.counts[i] * d * d;
    }
    var /= n;
    PairwiseLr lr;
    lr.model_a = a.family;
    lr.model_b = b.family;
    if (var > 0.0) {
      lr.z = mean * std::sqrt(n) / std::sqrt(var);
      lr.p_two_sided = 2.0 * (1.0 - normal_cdf(std::abs(lr.z)));
    } else {
      lr.z = 0.0;
      lr.p_two_sided = 1.0;
    }
    return lr;
  };
  cmp.pairs.push_back(vuong(cmp.powerlaw, lp_pl, cmp.lognormal, lp_ln));
  cmp.pairs.push_back(vuong(cmp.powerlaw, lp_pl, cmp.exponential, lp_ex));
  cmp.pairs.push_back(vuong(cmp.lognormal, lp_ln, cmp.exponential, lp_ex));

  cmp.preferred = cmp.powerlaw.family;
  double best = cmp.powerlaw.aic;
  for (const auto* c : {&cmp.lognormal, &cmp.exponential}) {
    if (c->aic < best) {
      best = c->aic;
      cmp.preferred = c->family;
    }
  }
  return cmp;
}

// --------------------------------------------- synthetic spectrum helpers ---
// Generators for planted-truth experiments: unnormalized weights over ranks
// 1..R for each family, multinomial sampling, and table construction.

inline std::vector<double> powerlaw_rank_weights(double alpha, std::size_t R) {
  std::vector<double> w(R);
  for (std::size_t r = 1; r <= R; ++r) w[r - 1] = std::pow(double(r), -alpha);
  return w;
}

inline std::vector<double> lognormal_rank_weights(double mu, double sigma,
                                                  std::size_t R) {
  std::vector<double> w(R);
  for (std::size_t r = 1; r <= R; ++r) {
    const double d = (std::log(double(r)) - mu) / sigma;
    w[r - 1] = std::exp(-0.5 * d * d) / double(r);
  }
  return w;
}

inline std::vector<double> exponential_rank_weights(double lambda,
                                                    std::size_t R) {
  std::vector<double> w(R);
  for (std::size_t r = 1; r <= R; ++r) w[r - 1] = std::exp(-lambda * double(r));
  return w;
}

// n multinomial draws from the normalized weights; returns per-rank counts
inline std::vector<std::uint64_t> sample_rank_counts(
    const std::vector<double>& weights, std::uint64_t n, Rng& rng) {
  std::vector<double> cum(weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    cum[i] = acc;
  }
  std::vector<std::uint64_t> counts(weights.size(), 0);
  for (std::uint64_t i = 0; i < n; ++i) {
    const double u = rng.uniform01() * acc;
    const auto it = std::lower_bound(cum.begin(), cum.end(), u);
    counts[std::min<std::size_t>(it - cum.begin(), weights.size() - 1)] += 1;
  }
  return counts;
}

// FreqTable from per-rank counts (zero ranks dropped); names are zero-padded
// so lexicographic tie order equals numeric order.
inline FreqTable table_from_rank_counts(
    const std::vector<std::uint64_t>& counts) {
  std::map<std::string, long long> m;
  char buf[16];
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    std::snprintf(buf, sizeof buf, "t%07zu", i + 1);
    m[buf] = static_cast<long long>(counts[i]);
  }
  return FreqTable::from_counts(m);
}

}  // namespace itlab
