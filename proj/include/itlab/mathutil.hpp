#pragma once
// Small numerical toolbox shared across the library: special functions,
// 1-D optimization, quadrature, and least squares. Everything here is
// deterministic and header-only.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace itlab {

inline constexpr double kPi = 3.14159265358979323846;

inline double log_beta(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

inline double log_binom(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

inline double normal_logpdf(double x, double mu = 0.0, double sd = 1.0) {
  const double z = (x - mu) / sd;
  return -0.5 * z * z - std::log(sd) - 0.5 * std::log(2.0 * kPi);
}

// log density of the chi-square distribution with nu degrees of freedom.
inline double chi2_logpdf(double x, double nu) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  const double h = 0.5 * nu;
  return (h - 1.0) * std::log(x) - 0.5 * x - h * std::log(2.0) - std::lgamma(h);
}

// Golden-section search for the minimum of a unimodal function on [lo, hi].
// Returns the abscissa; |result - argmin| <= tol.
template <typename F>
double golden_minimize(F&& f, double lo, double hi, double tol,
                       int max_iter = 200) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;   // 1/phi
  double a = lo, b = hi;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < max_iter && (b - a) > tol; ++i) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

inline double mean_of(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean_of: empty input");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
}

// Unbiased sample variance (ddof = 1).
inline double variance_of(std::span<const double> xs) {
  if (xs.size() < 2) throw std::invalid_argument("variance_of: need n >= 2");
  const double m = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return acc / double(xs.size() - 1);
}

inline double sd_of(std::span<const double> xs) {
  return std::sqrt(variance_of(xs));
}

inline double log_sum_exp(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("log_sum_exp: empty input");
  const double mx = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(mx)) return mx;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - mx);
  return mx + std::log(acc);
}

struct OlsFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n = 0;
};

// Ordinary least squares y = slope * x + intercept.
inline OlsFit ols_fit(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("ols_fit: size mismatch");
  if (x.size() < 2) throw std::invalid_argument("ols_fit: need n >= 2");
  const double mx = mean_of(x), my = mean_of(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("ols_fit: x has zero variance");
  OlsFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.n = x.size();
  fit.r_squared = (syy == 0.0) ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

inline double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("pearson_r: need matched n >= 2");
  const double mx = mean_of(x), my = mean_of(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::invalid_argument("pearson_r: zero-variance input");
  return sxy / std::sqrt(sxx * syy);
}

// Average ranks (1-based) with ties sharing the mean of their rank block.
inline std::vector<double> average_ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[idx[j + 1]] == xs[idx[i]]) ++j;
    const double r = 0.5 * (double(i + 1) + double(j + 1));
    for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double spearman_rho(std::span<const double> x, std::span<const double> y) {
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson_r(rx, ry);
}

// 16-point Gauss-Legendre nodes/weights on [-1, 1] (positive half; mirror).
inline constexpr std::array<double, 8> kGl16Nodes = {
    0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
    0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
    0.9445750230732326, 0.9894009349916499};
inline constexpr std::array<double, 8> kGl16Weights = {
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
    0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
    0.0622535239386479, 0.0271524594117541};

// Composite 16-point Gauss-Legendre quadrature over [a, b].
template <typename F>
double integrate_gl(F&& f, double a, double b, int panels = 32) {
  if (!(b > a)) throw std::invalid_argument("integrate_gl: need b > a");
  if (panels < 1) panels = 1;
  const double h = (b - a) / panels;
  double total = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h;
    const double half = 0.5 * h;
    double acc = 0.0;
    for (std::size_t i = 0; i < kGl16Nodes.size(); ++i) {
      acc += kGl16Weights[i] *
             (f(mid + half * kGl16Nodes[i]) + f(mid - half * kGl16Nodes[i]));
    }
    total += acc * half;
  }
  return total;
}

struct NelderMeadResult {
  double x = 0.0, y = 0.0, value = 0.0;
};

// Minimal 2-D Nelder-Mead for smooth low-dimensional fits.
template <typename F>
NelderMeadResult nelder_mead_2d(F&& f, double x0, double y0, double scale,
                                int max_iter = 500) {
  struct Pt { double x, y, v; };
  std::array<Pt, 3> s = {Pt{x0, y0, 0.0},
                         Pt{x0 + scale, y0, 0.0},
                         Pt{x0, y0 + scale, 0.0}};
  for (auto& p : s) p.v = f(p.x, p.y);
  auto order = [&] {
    std::sort(s.begin(), s.end(),
              [](const Pt& a, const Pt& b) { return a.v < b.v; });
  };
  order();
  for (int it = 0; it < max_iter; ++it) {
    const double cx = 0.5 * (s[0].x + s[1].x), cy = 0.5 * (s[0].y + s[1].y);
    Pt refl{cx + (cx - s[2].x), cy + (cy - s[2].y), 0.0};
    refl.v = f(refl.x, refl.y);
    if (refl.v < s[0].v) {
      Pt exp_{cx + 2.0 * (cx - s[2].x), cy + 2.0 * (cy - s[2].y), 0.0};
      exp_.v = f(exp_.x, exp_.y);
      s[2] = (exp_.v < refl.v) ? exp_ : refl;
    } else if (refl.v < s[1].v) {
      s[2] = refl;
    } else {
      Pt con{cx + 0.5 * (s[2].x - cx), cy + 0.5 * (s[2].y - cy), 0.0};
      con.v = f(con.x, con.y);
      if (con.v < s[2].v) {
        s[2] = con;
      } else {
        for (int i = 1; i < 3; ++i) {
          s[i].x = 0.5 * (s[i].x + s[0].x);
          s[i].y = 0.5 * (s[i].y + s[0].y);
          s[i].v = f(s[i].x, s[i].y);
        }
      }
    }
    order();
    if (std::abs(s[2].v - s[0].v) < 1e-12 &&
        std::abs(s[2].x - s[0].x) + std::abs(s[2].y - s[0].y) < 1e-10)
      break;
  }
  return {s[0].x, s[0].y, s[0].v};
}

}  // namespace itlab
