#pragma once
// Deterministic random number generation with explicit substreams.
//
// Standard-library distributions are implementation-defined, so every draw
// here is hand-rolled on top of xoshiro256**. Given the same seed and call
// sequence, results are bit-identical across platforms and compilers.
//
// Substreams: Rng::derive(master, {ids...}) hashes a path of integer ids
// into an independent stream. The pipeline gives every purpose (sampling,
// filtering, scoring, ...) its own path so that consuming draws in one
// purpose never perturbs another.

#include <cstdint>
#include <initializer_list>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace itlab {

struct SplitMix64 {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    SplitMix64 sm{seed};
    bool nonzero = false;
    for (auto& w : s_) {
      w = sm.next();
      nonzero |= (w != 0);
    }
    if (!nonzero) s_[0] = 0x9E3779B97F4A7C15ull;
  }

  // Independent stream for a purpose path, e.g. {seed_run, generation, kind}.
  static Rng derive(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = master;
    for (std::uint64_t id : path) {
      SplitMix64 sm{h ^ (0xD1B54A32D192ED03ull * (id + 1))};
      h = sm.next();
    }
    return Rng(h);
  }

  std::uint64_t next_u64() {
    const std::uint64_t r = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return r;
  }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Unbiased integer on [0, n).
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
    const std::uint64_t t = (-n) % n;  // 2^64 mod n
    std::uint64_t r;
    do { r = next_u64(); } while (r < t);
    return r % n;
  }

  // Standard normal via Marsaglia polar; caches the spare deviate.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double normal(double mu, double sd) { return mu + sd * normal(); }

  // Gamma(shape, 1) via Marsaglia-Tsang, boosted for shape < 1.
  double gamma_shape(double a) {
    if (!(a > 0.0)) throw std::invalid_argument("Rng::gamma_shape: a must be > 0");
    if (a < 1.0) {
      double u;
      do { u = uniform01(); } while (u <= 0.0);
      return gamma_shape(a + 1.0) * std::pow(u, 1.0 / a);
    }
    const double d = a - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
        return d * v;
    }
  }

  double beta(double a, double b) {
    const double x = gamma_shape(a);
    const double y = gamma_shape(b);
    if (x + y == 0.0) {
      // Both gammas underflowed (tiny shapes): the Beta mass sits at {0, 1}
      // with P(1) = a / (a + b).
      return uniform01() < a / (a + b) ? 1.0 : 0.0;
    }
    return x / (x + y);
  }

  // Exact Binomial(n, p) as a sum of Bernoulli draws; n stays small here.
  int binomial(int n, double p) {
    if (n < 0) throw std::invalid_argument("Rng::binomial: n must be >= 0");
    if (p < 0.0 || p > 1.0)
      throw std::invalid_argument("Rng::binomial: p must be in [0, 1]");
    int k = 0;
    for (int i = 0; i < n; ++i) k += (uniform01() < p) ? 1 : 0;
    return k;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = std::size_t(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct indices from [0, n), returned ascending.
  std::vector<std::size_t> choose_without_replacement(std::size_t n, std::size_t k) {
    if (k > n)
      throw std::invalid_argument("Rng::choose_without_replacement: k > n");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + std::size_t(below(n - i));
      std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace itlab
