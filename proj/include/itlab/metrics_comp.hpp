#pragma once
// Compositionality metrics and collapse-robust diagnostics: topographic
// similarity (Spearman over meaning/form distance pairs), Mantel permutation
// test, effective rank of meaning/form embedding matrices, and positional
// disentanglement. A CSV exporter emits the per-generation dashboard row.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "itlab/csv.hpp"
#include "itlab/mathutil.hpp"
#include "itlab/meaning.hpp"
#include "itlab/rng.hpp"

namespace itlab {

// --------------------------------------------------------- DistanceMatrix ---

struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<double> values;  // row-major n*n

  double at(std::size_t i, std::size_t j) const { return values[i * n + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * n + j]; }

  static DistanceMatrix zeros(std::size_t n) {
    DistanceMatrix m;
    m.n = n;
    m.values.assign(n * n, 0.0);
    return m;
  }
};

inline void validate_distance_matrix(const DistanceMatrix& m) {
  if (m.values.size() != m.n * m.n)
    throw std::invalid_argument("DistanceMatrix: size mismatch");
  for (std::size_t i = 0; i < m.n; ++i) {
    if (m.at(i, i) != 0.0)
      throw std::invalid_argument("DistanceMatrix: nonzero diagonal");
    for (std::size_t j = 0; j < i; ++j) {
      if (m.at(i, j) < 0.0)
        throw std::invalid_argument("DistanceMatrix: negative entry");
      if (m.at(i, j) != m.at(j, i))
        throw std::invalid_argument("DistanceMatrix: asymmetric");
    }
  }
}

template <typename T, typename Dist>
DistanceMatrix pairwise_distances(const std::vector<T>& items, Dist dist) {
  auto m = DistanceMatrix::zeros(items.size());
  for (std::size_t i = 0; i < items.size(); ++i)
    for (std::size_t j = i + 1; j < items.size(); ++j) {
      const double d = dist(items[i], items[j]);
      m.at(i, j) = d;
      m.at(j, i) = d;
    }
  return m;
}

// ------------------------------------------------------------ Mantel test ---

struct MantelResult {
  double z = 0.0;
  double p = 1.0;
  double r_observed = 0.0;
  bool degenerate = false;     // zero variance in either distance vector
  bool exhaustive = false;     // all n! permutations enumerated
  std::uint64_t n_perm = 0;    // permutations actually evaluated
};

namespace detail {

inline std::vector<double> upper_triangle(const DistanceMatrix& m) {
  std::vector<double> v;
  v.reserve(m.n * (m.n - 1) / 2);
  for (std::size_t i = 0; i < m.n; ++i)
    for (std::size_t j = i + 1; j < m.n; ++j) v.push_back(m.at(i, j));
  return v;
}

inline double factorial_capped(std::size_t n, std::uint64_t cap) {
  double f = 1.0;
  for (std::size_t i = 2; i <= n; ++i) {
    f *= double(i);
    if (f > double(cap)) return f;
  }
  return f;
}

}  // namespace detail

inline MantelResult mantel_test(const DistanceMatrix& dm,
                                const DistanceMatrix& df,
                                std::uint64_t n_perm, Rng& rng) {
  validate_distance_matrix(dm);
  validate_distance_matrix(df);
  if (dm.n != df.n)
    throw std::invalid_argument("mantel_test: size mismatch");
  if (n_perm < 100)
    throw std::invalid_argument("mantel_test: n_perm >= 100");
  if (dm.n < 3) throw std::invalid_argument("mantel_test: need n >= 3");

  const auto a = detail::upper_triangle(dm);
  const auto b = detail::upper_triangle(df);
  MantelResult res;
  if (sd_of(a) == 0.0 || sd_of(b) == 0.0) {
    res.degenerate = true;
    return res;
  }
  res.r_observed = pearson_r(a, b);

  std::vector<std::size_t> perm(dm.n);
  std::iota(perm.begin(), perm.end(), 0);
  auto permuted_r = [&]() {
    std::vector<double> pb;
    pb.reserve(b.size());
    for (std::size_t i = 0; i < dm.n; ++i)
      for (std::size_t j = i + 1; j < dm.n; ++j)
        pb.push_back(df.at(perm[i], perm[j]));
    return pearson_r(a, pb);
  };

  std::vector<double> rs;
  const bool exhaustive =
      detail::factorial_capped(dm.n, n_perm) <= double(n_perm);
  if (exhaustive) {
    do {
      rs.push_back(permuted_r());
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    rs.reserve(n_perm);
    for (std::uint64_t k = 0; k < n_perm; ++k) {
      rng.shuffle(perm);
      rs.push_back(permuted_r());
    }
  }
  const double m = mean_of(rs);
  const double s = sd_of(rs);
  res.exhaustive = exhaustive;
  res.n_perm = rs.size();
  res.z = s > 0.0 ? (res.r_observed - m) / s : 0.0;
  std::uint64_t ge = 0;
  for (double r : rs)
    if (r >= res.r_observed - 1e-12) ++ge;
  res.p = exhaustive ? double(ge) / double(rs.size())
                     : double(1 + ge) / double(n_perm + 1);
  return res;
}

// ----------------------------------------------------------------- topsim ---

struct TopsimReport {
  double sigma = 0.0;          // Spearman over distance pairs
  std::size_t n_pairs = 0;
  std::size_t ties_meaning = 0;  // duplicated distance values per space
  std::size_t ties_form = 0;
  double mantel_z = 0.0;
  double mantel_p = 1.0;
  bool degenerate = false;     // zero variance in either vector
};

inline TopsimReport topsim(const std::vector<MeaningFrame>& meanings,
                           const std::vector<FormTemplate>& forms,
                           std::uint64_t n_perm = 10000,
                           Rng* rng = nullptr) {
  if (meanings.size() != forms.size())
    throw std::invalid_argument("topsim: length mismatch");
  if (meanings.size() < 4)
    throw std::invalid_argument("topsim: need n >= 4 items");
  const auto dm = pairwise_distances(meanings, meaning_distance);
  const auto df = pairwise_distances(forms, form_distance);
  const auto a = detail::upper_triangle(dm);
  const auto b = detail::upper_triangle(df);

  TopsimReport rep;
  rep.n_pairs = a.size();
  auto count_ties = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.size() - std::size_t(std::unique(v.begin(), v.end()) - v.begin());
  };
  rep.ties_meaning = count_ties(a);
  rep.ties_form = count_ties(b);
  if (sd_of(a) == 0.0 || sd_of(b) == 0.0) {
    rep.degenerate = true;
    return rep;
  }
  rep.sigma = spearman_rho(a, b);

  Rng local(0x709D15u);
  const auto mt = mantel_test(dm, df, n_perm, rng ? *rng : local);
  rep.mantel_z = mt.z;
  rep.mantel_p = mt.p;
  return rep;
}

// --------------------------------------------------------- effective rank ---

inline double effective_rank(const Eigen::MatrixXd& m) {
  if (m.rows() == 0 || m.cols() == 0)
    throw std::invalid_argument("effective_rank: empty matrix");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  const double total = sv.sum();
  if (!(total > 0.0))
    throw std::invalid_argument("effective_rank: all-zero matrix");
  double h = 0.0;
  for (Eigen::Index k = 0; k < sv.size(); ++k) {
    const double p = sv[k] / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::exp(h);
}

// meaning-space embedding: multi-hot over (role, filler-class) pairs
// (the predicate participates as the pseudo-role PRED)
inline Eigen::MatrixXd meaning_matrix(const std::vector<MeaningFrame>& frames) {
  std::map<std::pair<std::string, std::string>, Eigen::Index> feat;
  for (const auto& f : frames) {
    feat.emplace(std::make_pair(std::string("PRED"), f.pred_class()), 0);
    for (const auto& [role, filler] : f.roles)
      feat.emplace(std::make_pair(role, f.role_class(role)), 0);
  }
  Eigen::Index next = 0;
  for (auto& [k, idx] : feat) idx = next++;
  Eigen::MatrixXd m =
      Eigen::MatrixXd::Zero(Eigen::Index(frames.size()), next);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    m(Eigen::Index(i),
      feat.at(std::make_pair(std::string("PRED"), f.pred_class()))) = 1.0;
    for (const auto& [role, filler] : f.roles)
      m(Eigen::Index(i), feat.at(std::make_pair(role, f.role_class(role)))) =
          1.0;
  }
  return m;
}

// form-space embedding: multi-hot over slot bigrams with boundary markers
inline Eigen::MatrixXd form_matrix(const std::vector<FormTemplate>& forms) {
  std::map<std::pair<std::string, std::string>, Eigen::Index> feat;
  auto each_bigram = [](const FormTemplate& t, auto&& fn) {
    std::string prev = "<BOS>";
    for (const auto& s : t.slots) {
      fn(prev, s);
      prev = s;
    }
    fn(prev, std::string("<EOS>"));
  };
  for (const auto& t : forms)
    each_bigram(t, [&](const std::string& a, const std::string& b) {
      feat.emplace(std::make_pair(a, b), 0);
    });
  Eigen::Index next = 0;
  for (auto& [k, idx] : feat) idx = next++;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(Eigen::Index(forms.size()), next);
  for (std::size_t i = 0; i < forms.size(); ++i)
    each_bigram(forms[i], [&](const std::string& a, const std::string& b) {
      m(Eigen::Index(i), feat.at(std::make_pair(a, b))) = 1.0;
    });
  return m;
}

// ------------------------------------------------------------------ posdis ---

// messages: equal-length symbol sequences; attributes: per-item tuples
inline double posdis(const std::vector<std::vector<std::string>>& messages,
                     const std::vector<std::vector<std::string>>& attributes) {
  if (messages.empty() || messages.size() != attributes.size())
    throw std::invalid_argument("posdis: size mismatch or empty");
  const std::size_t L = messages.front().size();
  if (L == 0) throw std::invalid_argument("posdis: zero-length messages");
  const std::size_t A = attributes.front().size();
  if (A < 2) throw std::invalid_argument("posdis: need >= 2 attributes");
  for (const auto& m : messages)
    if (m.size() != L)
      throw std::invalid_argument("posdis: unequal message lengths");
  for (const auto& a : attributes)
    if (a.size() != A)
      throw std::invalid_argument("posdis: unequal attribute tuples");

  const double n = double(messages.size());
  auto entropy = [&](const std::map<std::string, std::size_t>& counts) {
    double h = 0.0;
    for (const auto& [k, c] : counts) {
      const double p = double(c) / n;
      h -= p * std::log2(p);
    }
    return h;
  };

  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t j = 0; j < L; ++j) {
    std::map<std::string, std::size_t> sym;
    for (const auto& m : messages) ++sym[m[j]];
    const double hs = entropy(sym);
    if (hs <= 0.0) continue;
    std::vector<double> mi(A, 0.0);
    for (std::size_t k = 0; k < A; ++k) {
      std::map<std::string, std::size_t> att;
      std::map<std::pair<std::string, std::string>, std::size_t> joint;
      for (std::size_t i = 0; i < messages.size(); ++i) {
        ++att[attributes[i][k]];
        ++joint[{messages[i][j], attributes[i][k]}];
      }
      double hj = 0.0;
      for (const auto& [key, c] : joint) {
        const double p = double(c) / n;
        hj -= p * std::log2(p);
      }
      mi[k] = hs + entropy(att) - hj;  // I(s_j; a_k)
    }
    std::sort(mi.begin(), mi.end(), std::greater<>());
    total += (mi[0] - mi[1]) / hs;
    ++used;
  }
  if (used == 0)
    throw std::invalid_argument("posdis: no position with positive entropy");
  return total / double(used);
}

// pipeline mapping: messages = slot sequences padded to the longest template
// with a null symbol; attributes = (predicate class, ARG0.., ARG1.. classes)
struct PosdisInputs {
  std::vector<std::vector<std::string>> messages;
  std::vector<std::vector<std::string>> attributes;
};

inline PosdisInputs posdis_inputs(const std::vector<MeaningFrame>& frames,
                                  const std::vector<FormTemplate>& forms,
                                  const std::vector<std::string>& roles = {
                                      "ARG0", "ARG1"}) {
  if (frames.size() != forms.size())
    throw std::invalid_argument("posdis_inputs: length mismatch");
  PosdisInputs in;
  std::size_t L = 0;
  for (const auto& t : forms) L = std::max(L, t.slots.size());
  for (std::size_t i = 0; i < forms.size(); ++i) {
    auto msg = forms[i].slots;
    msg.resize(L, "\xE2\x88\x85");  // U+2205 empty-set padding
    in.messages.push_back(std::move(msg));
    std::vector<std::string> attr{frames[i].pred_class()};
    for (const auto& r : roles) {
      const auto cls = frames[i].role_class(r);
      attr.push_back(cls.empty() ? "none" : cls);
    }
    in.attributes.push_back(std::move(attr));
  }
  return in;
}

// ------------------------------------------------------------- dashboard ---

struct DiagnosticsReport {
  double erank_meaning = 1.0;
  double erank_form = 1.0;
  double posdis_value = 0.0;
  std::size_t unique_messages = 0;
};

inline DiagnosticsReport diagnostics_report(
    const std::vector<MeaningFrame>& frames,
    const std::vector<FormTemplate>& forms) {
  DiagnosticsReport rep;
  rep.erank_meaning = effective_rank(meaning_matrix(frames));
  rep.erank_form = effective_rank(form_matrix(forms));
  const auto in = posdis_inputs(frames, forms);
  rep.posdis_value = posdis(in.messages, in.attributes);
  std::set<FormTemplate> uniq(forms.begin(), forms.end());
  rep.unique_messages = uniq.size();
  return rep;
}

struct DashboardRow {
  std::string run;
  int generation = 0;
  std::optional<double> sigma;  // empty on degenerate topsim
  double erank_meaning = 0.0;
  double erank_form = 0.0;
  std::optional<double> posdis_value;
  double mantel_z = 0.0;
  double mantel_p = 1.0;
  std::size_t unique_messages = 0;
};

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

inline csv::Table dashboard_table(const std::vector<DashboardRow>& rows) {
  csv::Table t;
  t.header = {"run",      "generation", "sigma",    "erank_meaning",
              "erank_form", "posdis",   "mantel_z", "mantel_p",
              "unique_messages"};
  for (const auto& r : rows) {
    t.rows.push_back({r.run, std::to_string(r.generation),
                      r.sigma ? format_double(*r.sigma) : "degenerate",
                      format_double(r.erank_meaning),
                      format_double(r.erank_form),
                      r.posdis_value ? format_double(*r.posdis_value) : "",
                      format_double(r.mantel_z), format_double(r.mantel_p),
                      std::to_string(r.unique_messages)});
  }
  return t;
}

}  // namespace itlab
