#pragma once
// Inferential battery: Hedges' g, studentized bootstrap CIs, BH-FDR,
// exponential decay fits, correlation reports, and permutation tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "itlab/mathutil.hpp"
#include "itlab/rng.hpp"

namespace itlab {

// Inverse standard normal CDF (Acklam's rational approximation, |e| < 1.2e-9).
inline double probit(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("probit: p must be in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1.0 - plow;
  double q, r, x;
  if (p < plow) {
    q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= phigh) {
    q = p - 0.5;
    r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  return x;
}

struct BootstrapCi {
  double lo = 0.0, hi = 0.0;
  std::size_t resamples_used = 0;
  std::size_t resamples_skipped = 0;  // zero-variance resamples
};

struct Hdi {
  double lo = 0.0, hi = 0.0;
};

struct EffectSizeReport {
  double hedges_g = 0.0;
  double j_factor = 1.0;
  std::size_t n1 = 0, n2 = 0;
  std::optional<BootstrapCi> bootstrap_ci;
  std::optional<Hdi> hdi;
  std::optional<double> bf10;
};

inline double small_sample_j(std::size_t df) {
  return 1.0 - 3.0 / (4.0 * double(df) - 1.0);
}

// Hedges' g with small-sample correction; orientation mean(a) - mean(b).
inline EffectSizeReport hedges_g(std::span<const double> a,
                                 std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw std::invalid_argument("hedges_g: need n >= 2 per group");
  const double va = variance_of(a), vb = variance_of(b);
  const std::size_t df = a.size() + b.size() - 2;
  const double pooled =
      ((double(a.size()) - 1.0) * va + (double(b.size()) - 1.0) * vb) /
      double(df);
  if (pooled <= 0.0)
    throw std::invalid_argument("hedges_g: zero pooled variance");
  EffectSizeReport rep;
  rep.n1 = a.size();
  rep.n2 = b.size();
  rep.j_factor = small_sample_j(df);
  rep.hedges_g =
      rep.j_factor * (mean_of(a) - mean_of(b)) / std::sqrt(pooled);
  return rep;
}

// Studentized bootstrap CI on the mean difference mean(a) - mean(b).
// Per-resample SE is the plug-in two-sample (Welch) formula; zero-variance
// resamples are skipped and counted.
inline BootstrapCi bootstrap_t_ci(std::span<const double> a,
                                  std::span<const double> b, std::size_t B,
                                  double level, Rng& rng) {
  if (B < 1000) throw std::invalid_argument("bootstrap_t_ci: B must be >= 1000");
  if (a.size() < 2 || b.size() < 2)
    throw std::invalid_argument("bootstrap_t_ci: need n >= 2 per group");
  if (!(level > 0.0 && level < 1.0))
    throw std::invalid_argument("bootstrap_t_ci: level in (0,1)");
  auto plug_se = [](std::span<const double> x, std::span<const double> y) {
    return std::sqrt(variance_of(x) / double(x.size()) +
                     variance_of(y) / double(y.size()));
  };
  const double theta = mean_of(a) - mean_of(b);
  const double se = plug_se(a, b);
  if (se == 0.0)
    throw std::invalid_argument("bootstrap_t_ci: degenerate zero variance");

  std::vector<double> ra(a.size()), rb(b.size());
  std::vector<double> tstats;
  tstats.reserve(B);
  std::size_t skipped = 0;
  for (std::size_t it = 0; it < B; ++it) {
    for (auto& v : ra) v = a[std::size_t(rng.below(a.size()))];
    for (auto& v : rb) v = b[std::size_t(rng.below(b.size()))];
    const double se_b = plug_se(ra, rb);
    if (se_b == 0.0) {
      ++skipped;
      continue;
    }
    const double theta_b = mean_of(ra) - mean_of(rb);
    tstats.push_back((theta_b - theta) / se_b);
  }
  if (tstats.size() < 100)
    throw std::invalid_argument(
        "bootstrap_t_ci: too few usable resamples (degenerate input)");
  std::sort(tstats.begin(), tstats.end());
  auto quantile = [&](double p) {
    const double idx = p * double(tstats.size() - 1);
    const std::size_t lo = std::size_t(std::floor(idx));
    const std::size_t hi = std::min(lo + 1, tstats.size() - 1);
    const double frac = idx - double(lo);
    return (1.0 - frac) * tstats[lo] + frac * tstats[hi];
  };
  const double alpha = 1.0 - level;
  BootstrapCi ci;
  ci.lo = theta - quantile(1.0 - alpha / 2.0) * se;
  ci.hi = theta - quantile(alpha / 2.0) * se;
  ci.resamples_used = tstats.size();
  ci.resamples_skipped = skipped;
  return ci;
}

struct FdrResult {
  std::vector<std::size_t> rejected;  // original indices, ascending
  double threshold = 0.0;             // largest rejected p-value (0 if none)
};

// Benjamini-Hochberg step-up procedure at level q.
inline FdrResult bh_fdr(std::span<const double> pvals, double q) {
  for (double p : pvals)
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("bh_fdr: p-values must lie in [0,1]");
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("bh_fdr: q must be in (0,1)");
  const std::size_t m = pvals.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (pvals[x] != pvals[y]) return pvals[x] < pvals[y];
    return x < y;
  });
  std::size_t kmax = 0;
  for (std::size_t k = 1; k <= m; ++k)
    if (pvals[order[k - 1]] <= double(k) * q / double(m)) kmax = k;
  FdrResult res;
  for (std::size_t i = 0; i < kmax; ++i) res.rejected.push_back(order[i]);
  std::sort(res.rejected.begin(), res.rejected.end());
  if (kmax > 0) res.threshold = pvals[order[kmax - 1]];
  return res;
}

struct DecayFit {
  double lambda = 0.0;
  double delta0 = 0.0;
  double r_squared = 0.0;
  std::optional<int> gen95;          // ceil(ln 20 / lambda) when lambda > 0
  std::size_t excluded = 0;          // non-positive deltas dropped
  std::vector<std::string> warnings;
};

// Exponential decay fit Delta_n = Delta_0 * exp(-lambda n) by OLS on
// ln(Delta_n) vs n. Points are (n, Delta_n) pairs.
inline DecayFit fit_decay(std::span<const std::pair<double, double>> points) {
  std::vector<double> xs, ys;
  DecayFit fit;
  for (const auto& [n, d] : points) {
    if (d <= 0.0) {
      ++fit.excluded;
      continue;
    }
    xs.push_back(n);
    ys.push_back(std::log(d));
  }
  if (fit.excluded > 0)
    fit.warnings.push_back("fit_decay: excluded " +
                           std::to_string(fit.excluded) +
                           " non-positive delta(s)");
  if (xs.size() < 3)
    throw std::invalid_argument("fit_decay: need >= 3 positive deltas");
  const OlsFit ols = ols_fit(xs, ys);
  fit.lambda = -ols.slope;
  fit.delta0 = std::exp(ols.intercept);
  fit.r_squared = ols.r_squared;
  if (fit.lambda > 0.0)
    fit.gen95 = int(std::ceil(std::log(20.0) / fit.lambda));
  return fit;
}

// Convenience: deltas indexed 0..k-1.
inline DecayFit fit_decay(std::span<const double> deltas) {
  std::vector<std::pair<double, double>> pts;
  pts.reserve(deltas.size());
  for (std::size_t i = 0; i < deltas.size(); ++i)
    pts.emplace_back(double(i), deltas[i]);
  return fit_decay(std::span<const std::pair<double, double>>(pts));
}

struct CorrelationReport {
  double pearson_r = 0.0;
  double r_ci_lo = 0.0, r_ci_hi = 0.0;  // Fisher-z interval
  double spearman_rho = 0.0;
  std::size_t n = 0;
};

inline CorrelationReport correlations(std::span<const double> x,
                                      std::span<const double> y,
                                      double level = 0.95) {
  if (x.size() != y.size() || x.size() < 3)
    throw std::invalid_argument("correlations: need matched n >= 3");
  CorrelationReport rep;
  rep.n = x.size();
  rep.pearson_r = pearson_r(x, y);  // throws on zero variance
  rep.spearman_rho = spearman_rho(x, y);
  if (rep.n > 3) {
    const double z = std::atanh(std::clamp(rep.pearson_r, -1.0 + 1e-15, 1.0 - 1e-15));
    const double se = 1.0 / std::sqrt(double(rep.n) - 3.0);
    const double zcrit = probit(0.5 + level / 2.0);
    rep.r_ci_lo = std::tanh(z - zcrit * se);
    rep.r_ci_hi = std::tanh(z + zcrit * se);
  } else {
    rep.r_ci_lo = -1.0;
    rep.r_ci_hi = 1.0;
  }
  return rep;
}

// Two-sided permutation test on |mean(a) - mean(b)|. Exact enumeration when
// the group-assignment count is small; otherwise Monte Carlo with the
// add-one estimator. Deterministic given rng.
inline double mean_diff_permutation_p(std::span<const double> a,
                                      std::span<const double> b, Rng& rng,
                                      std::size_t n_perm = 10000) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("permutation test: empty group");
  std::vector<double> all(a.begin(), a.end());
  all.insert(all.end(), b.begin(), b.end());
  const std::size_t n1 = a.size(), n = all.size();
  const double obs = std::abs(mean_of(a) - mean_of(b));

  // Count C(n, n1) with overflow guard.
  double log_combos = log_binom(double(n), double(n1));
  if (log_combos <= std::log(20000.0)) {
    // Exact: enumerate all subsets of size n1 (lexicographic combinations).
    std::vector<std::size_t> comb(n1);
    std::iota(comb.begin(), comb.end(), std::size_t{0});
    std::size_t ge = 0, total = 0;
    const double total_sum = std::accumulate(all.begin(), all.end(), 0.0);
    while (true) {
      double s1 = 0.0;
      for (auto i : comb) s1 += all[i];
      const double m1 = s1 / double(n1);
      const double m2 = (total_sum - s1) / double(n - n1);
      if (std::abs(m1 - m2) >= obs - 1e-12) ++ge;
      ++total;
      // next combination
      std::size_t i = n1;
      while (i > 0 && comb[i - 1] == n - n1 + i - 1) --i;
      if (i == 0) break;
      ++comb[i - 1];
      for (std::size_t j = i; j < n1; ++j) comb[j] = comb[j - 1] + 1;
    }
    return double(ge) / double(total);
  }
  std::size_t ge = 0;
  std::vector<double> pool = all;
  for (std::size_t it = 0; it < n_perm; ++it) {
    rng.shuffle(pool);
    double s1 = 0.0;
    for (std::size_t i = 0; i < n1; ++i) s1 += pool[i];
    const double m1 = s1 / double(n1);
    double s2 = 0.0;
    for (std::size_t i = n1; i < n; ++i) s2 += pool[i];
    const double m2 = s2 / double(n - n1);
    if (std::abs(m1 - m2) >= obs - 1e-12) ++ge;
  }
  return double(1 + ge) / double(n_perm + 1);
}

// One-sided sign test: probability of >= k successes in n fair coin flips.
inline double sign_test_p(std::size_t k, std::size_t n) {
  if (k > n) throw std::invalid_argument("sign_test_p: k > n");
  double p = 0.0;
  for (std::size_t i = k; i <= n; ++i)
    p += std::exp(log_binom(double(n), double(i)) - double(n) * std::log(2.0));
  return std::min(p, 1.0);
}

}  // namespace itlab
