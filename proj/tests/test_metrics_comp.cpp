#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "itlab/metrics_comp.hpp"
#include "itlab/rng.hpp"

using namespace itlab;
using Catch::Approx;

namespace {

MeaningFrame frame(std::string pred, std::string pred_cls,
                   std::vector<std::array<std::string, 3>> role_filler_class) {
  MeaningFrame f;
  f.predicate = std::move(pred);
  f.predicate_class = std::move(pred_cls);
  for (auto& [role, filler, cls] : role_filler_class) {
    f.roles[role] = filler;
    f.role_classes[role] = cls;
  }
  return f;
}

FormTemplate tpl(std::vector<std::string> slots) {
  FormTemplate t;
  t.slots = std::move(slots);
  return t;
}

// independent oracle: naive full-matrix edit distance
std::size_t lev_oracle(const std::vector<std::string>& a,
                       const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1,
                                          std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
  return d[a.size()][b.size()];
}

// independent oracle: Spearman via explicit average ranks and textbook Pearson
double spearman_oracle(const std::vector<double>& x,
                       const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    std::size_t i = 0;
    while (i < idx.size()) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = (double(i) + double(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= double(rx.size());
  my /= double(ry.size());
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// independent oracle: one-sided Jacobi SVD entropy
double erank_oracle(Eigen::MatrixXd a) {
  const Eigen::Index n = a.cols();
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool rotated = false;
    for (Eigen::Index i = 0; i < n - 1; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double app = a.col(i).squaredNorm();
        const double aqq = a.col(j).squaredNorm();
        const double apq = a.col(i).dot(a.col(j));
        if (std::abs(apq) <= 1e-14 * std::sqrt(app * aqq)) continue;
        rotated = true;
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index r = 0; r < a.rows(); ++r) {
          const double vi = a(r, i), vj = a(r, j);
          a(r, i) = c * vi - s * vj;
          a(r, j) = s * vi + c * vj;
        }
      }
    }
    if (!rotated) break;
  }
  std::vector<double> sv;
  for (Eigen::Index i = 0; i < n; ++i) sv.push_back(a.col(i).norm());
  const double total = std::accumulate(sv.begin(), sv.end(), 0.0);
  double h = 0.0;
  for (double s : sv) {
    const double p = s / total;
    if (p > 0) h -= p * std::log(p);
  }
  return std::exp(h);
}

}  // namespace

// ------------------------------------------------------------- distances ---

TEST_CASE("meaning distance on shared and disjoint frames", "[metricscomp]") {
  const auto a =
      frame("gave", "give", {{"ARG0", "mary", "human"},
                             {"ARG1", "book", "object"},
                             {"ARG2", "john", "human"}});
  const auto b =
      frame("gave2", "give", {{"ARG0", "teacher", "human"},
                              {"ARG1", "prize", "object"},
                              {"ARG2", "student", "human"}});
  // identical (role, class) sets and predicate class -> distance 0
  CHECK(meaning_distance(a, b) == Approx(0.0).margin(1e-12));
  CHECK(meaning_distance(a, a) == Approx(0.0).margin(1e-12));

  const auto c = frame("ran", "run", {{"ARG0", "dog", "animal"}});
  CHECK(meaning_distance(a, c) == Approx(1.0).margin(1e-12));

  // hand-counted partial overlap: intersection 2 of union 4 -> 0.5
  const auto d = frame("gave3", "give", {{"ARG0", "ann", "human"},
                                         {"ARG1", "idea", "abstract"}});
  const auto e = frame("gave4", "give", {{"ARG0", "bo", "human"},
                                         {"ARG1", "rock", "object"}});
  CHECK(meaning_distance(d, e) == Approx(0.5).margin(1e-12));
}

TEST_CASE("form distance is slot-label edit distance", "[metricscomp]") {
  CHECK(form_distance(tpl({"nsubj", "V"}), tpl({"nsubj", "V"})) == 0.0);
  CHECK(form_distance(tpl({"nsubj", "V"}), tpl({"nsubj", "V", "dobj"})) == 1.0);
  CHECK(form_distance(tpl({"a", "b", "c"}), tpl({"c", "b", "a"})) == 2.0);

  Rng rng(515);
  const std::vector<std::string> alpha{"s", "v", "o", "p", "m"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> x, y;
    for (std::size_t i = 0; i < 1 + rng.below(7); ++i)
      x.push_back(alpha[rng.below(alpha.size())]);
    for (std::size_t i = 0; i < 1 + rng.below(7); ++i)
      y.push_back(alpha[rng.below(alpha.size())]);
    CHECK(form_distance(tpl(x), tpl(y)) == double(lev_oracle(x, y)));
  }
}

// ---------------------------------------------------------------- topsim ---

TEST_CASE("topsim is 1 when form ordering mirrors meaning ordering",
          "[metricscomp]") {
  // four frames at increasing meaning distance from each other, with forms
  // whose edit distances grow in the same pair order
  std::vector<MeaningFrame> ms{
      frame("p1", "c1", {{"ARG0", "a", "k1"}}),
      frame("p1", "c1", {{"ARG0", "b", "k2"}}),
      frame("p2", "c2", {{"ARG0", "c", "k2"}}),
      frame("p3", "c3", {{"ARG0", "d", "k3"}})};
  std::vector<FormTemplate> fs{tpl({"s", "v"}),
                               tpl({"s", "v", "x1"}),
                               tpl({"s", "v", "x1", "x2", "x3"}),
                               tpl({"q1", "q2", "q3", "q4", "q5", "q6", "q7"})};
  std::vector<double> dm, df;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) {
      dm.push_back(meaning_distance(ms[i], ms[j]));
      df.push_back(form_distance(fs[i], fs[j]));
    }
  const auto rep = topsim(ms, fs, 200);
  CHECK_FALSE(rep.degenerate);
  CHECK(rep.n_pairs == 6);
  CHECK(rep.sigma == Approx(spearman_oracle(dm, df)).margin(1e-12));
}

TEST_CASE("topsim matches the brute-force oracle on a mixed fixture",
          "[metricscomp]") {
  std::vector<MeaningFrame> ms{
      frame("p1", "c1", {{"ARG0", "a", "k1"}, {"ARG1", "b", "k2"}}),
      frame("p2", "c2", {{"ARG0", "c", "k1"}}),
      frame("p3", "c1", {{"ARG0", "d", "k3"}, {"ARG1", "e", "k2"}}),
      frame("p4", "c4", {{"ARG1", "f", "k2"}})};
  std::vector<FormTemplate> fs{tpl({"s", "v", "o"}), tpl({"s", "v"}),
                               tpl({"o", "v", "s"}), tpl({"v", "o"})};
  std::vector<double> dm, df;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i + 1; j < 4; ++j) {
      dm.push_back(meaning_distance(ms[i], ms[j]));
      df.push_back(form_distance(fs[i], fs[j]));
    }
  const auto rep = topsim(ms, fs, 200);
  CHECK(rep.sigma == Approx(spearman_oracle(dm, df)).margin(1e-12));
}

TEST_CASE("topsim flags degenerate inputs instead of reporting zero",
          "[metricscomp]") {
  std::vector<MeaningFrame> ms{frame("p1", "c1", {{"ARG0", "a", "k1"}}),
                               frame("p2", "c2", {{"ARG0", "b", "k2"}}),
                               frame("p3", "c3", {{"ARG0", "c", "k3"}}),
                               frame("p4", "c4", {{"ARG0", "d", "k4"}})};
  std::vector<FormTemplate> fs(4, tpl({"s", "v", "o"}));  // all identical
  const auto rep = topsim(ms, fs, 200);
  CHECK(rep.degenerate);
  CHECK(rep.ties_form == 5);  // all six pair distances collapse to one value
}

TEST_CASE("topsim is invariant under joint permutation", "[metricscomp]") {
  Rng rng(626);
  std::vector<MeaningFrame> ms;
  std::vector<FormTemplate> fs;
  const std::vector<std::string> slots{"s", "v", "o", "p"};
  for (int i = 0; i < 7; ++i) {
    ms.push_back(frame("p" + std::to_string(rng.below(4)),
                       "c" + std::to_string(rng.below(3)),
                       {{"ARG0", "f", "k" + std::to_string(rng.below(3))}}));
    std::vector<std::string> sl;
    for (std::size_t j = 0; j < 2 + rng.below(3); ++j)
      sl.push_back(slots[rng.below(slots.size())]);
    fs.push_back(tpl(sl));
  }
  const auto base = topsim(ms, fs, 200);
  std::vector<std::size_t> perm{3, 0, 6, 1, 5, 2, 4};
  std::vector<MeaningFrame> ms2;
  std::vector<FormTemplate> fs2;
  for (auto i : perm) {
    ms2.push_back(ms[i]);
    fs2.push_back(fs[i]);
  }
  const auto rep = topsim(ms2, fs2, 200);
  REQUIRE(base.degenerate == rep.degenerate);
  if (!base.degenerate) CHECK(rep.sigma == Approx(base.sigma).margin(1e-12));
}

// ---------------------------------------------------------------- mantel ---

namespace {
DistanceMatrix random_distance_matrix(std::size_t n, Rng& rng) {
  auto m = DistanceMatrix::zeros(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = rng.uniform01() + 0.01;
      m.at(i, j) = d;
      m.at(j, i) = d;
    }
  return m;
}
}  // namespace

TEST_CASE("mantel on identical matrices gives the minimal p", "[metricscomp]") {
  Rng rng(747);
  const auto dm = random_distance_matrix(20, rng);
  Rng prng(748);
  const auto res = mantel_test(dm, dm, 999, prng);
  CHECK_FALSE(res.degenerate);
  CHECK_FALSE(res.exhaustive);
  CHECK(res.r_observed == Approx(1.0).margin(1e-12));
  CHECK(res.p == Approx(1.0 / 1000.0).margin(1e-12));
  CHECK(res.z > 3.0);
}

TEST_CASE("mantel exhaustive path matches a full-enumeration oracle",
          "[metricscomp]") {
  Rng rng(808);
  const auto dm = random_distance_matrix(5, rng);
  const auto df = random_distance_matrix(5, rng);
  Rng prng(809);
  const auto res = mantel_test(dm, df, 10000, prng);
  REQUIRE(res.exhaustive);
  REQUIRE(res.n_perm == 120);

  // oracle: enumerate all 120 permutations independently
  std::vector<double> a, rs;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = i + 1; j < 5; ++j) a.push_back(dm.at(i, j));
  std::vector<std::size_t> perm{0, 1, 2, 3, 4};
  double r_obs = 0.0;
  do {
    std::vector<double> b;
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = i + 1; j < 5; ++j)
        b.push_back(df.at(perm[i], perm[j]));
    double ma = 0, mb = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      ma += a[k];
      mb += b[k];
    }
    ma /= double(a.size());
    mb /= double(b.size());
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      sxy += (a[k] - ma) * (b[k] - mb);
      sxx += (a[k] - ma) * (a[k] - ma);
      syy += (b[k] - mb) * (b[k] - mb);
    }
    rs.push_back(sxy / std::sqrt(sxx * syy));
    if (std::equal(perm.begin(), perm.end(),
                   std::vector<std::size_t>{0, 1, 2, 3, 4}.begin()))
      r_obs = rs.back();
  } while (std::next_permutation(perm.begin(), perm.end()));
  REQUIRE(rs.size() == 120);
  double mean = 0;
  for (double r : rs) mean += r;
  mean /= 120.0;
  double var = 0;
  for (double r : rs) var += (r - mean) * (r - mean);
  const double sd = std::sqrt(var / 119.0);
  std::size_t ge = 0;
  for (double r : rs)
    if (r >= r_obs - 1e-12) ++ge;

  CHECK(res.r_observed == Approx(r_obs).margin(1e-12));
  CHECK(res.z == Approx((r_obs - mean) / sd).margin(1e-9));
  CHECK(res.p == Approx(double(ge) / 120.0).margin(1e-12));
  CHECK(res.p > 0.0);
  CHECK(res.p <= 1.0);
}

TEST_CASE("mantel p-values are uniform under the null", "[metricscomp]") {
  std::vector<double> ps;
  for (int trial = 0; trial < 200; ++trial) {
    Rng rng(9000 + trial);
    const auto dm = random_distance_matrix(20, rng);
    const auto df = random_distance_matrix(20, rng);
    Rng prng = Rng::derive(9500, {static_cast<std::uint64_t>(trial)});
    ps.push_back(mantel_test(dm, df, 999, prng).p);
  }
  std::sort(ps.begin(), ps.end());
  double d = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    d = std::max(d, std::abs(double(i + 1) / ps.size() - ps[i]));
    d = std::max(d, std::abs(ps[i] - double(i) / ps.size()));
  }
  CHECK(d < 1.628 / std::sqrt(200.0));  // KS alpha = 0.01
}

TEST_CASE("mantel z sign agrees with association direction", "[metricscomp]") {
  Rng rng(1010);
  const auto dm = random_distance_matrix(12, rng);
  auto df_pos = dm, df_neg = dm;
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = 0; j < 12; ++j) {
      if (i == j) continue;
      df_pos.at(i, j) = dm.at(i, j) + 0.05 * rng.uniform01();
      df_neg.at(i, j) = 1.2 - dm.at(i, j);
    }
  // re-symmetrize the jittered copy
  for (std::size_t i = 0; i < 12; ++i)
    for (std::size_t j = i + 1; j < 12; ++j)
      df_pos.at(j, i) = df_pos.at(i, j);
  Rng p1(1), p2(2);
  CHECK(mantel_test(dm, df_pos, 999, p1).z > 0.0);
  CHECK(mantel_test(dm, df_neg, 999, p2).z < 0.0);
}

TEST_CASE("distance matrix validation", "[metricscomp]") {
  auto m = DistanceMatrix::zeros(3);
  m.at(0, 1) = 1.0;  // asymmetric
  CHECK_THROWS_AS(validate_distance_matrix(m), std::invalid_argument);
  m.at(1, 0) = 1.0;
  CHECK_NOTHROW(validate_distance_matrix(m));
  m.at(2, 2) = 0.5;
  CHECK_THROWS_AS(validate_distance_matrix(m), std::invalid_argument);
}

// ---------------------------------------------------------- effective rank ---

TEST_CASE("effective rank on exact spectra", "[metricscomp]") {
  CHECK(effective_rank(Eigen::MatrixXd::Identity(4, 4)) ==
        Approx(4.0).margin(1e-9));
  Eigen::VectorXd u(3), v(4);
  u << 1.0, 1.0, 1.0;
  v << 1.0, 2.0, 3.0, 4.0;
  CHECK(effective_rank(u * v.transpose()) == Approx(1.0).margin(1e-9));
  CHECK_THROWS_AS(effective_rank(Eigen::MatrixXd::Zero(3, 3)),
                  std::invalid_argument);
}

TEST_CASE("effective rank matches an independent jacobi svd", "[metricscomp]") {
  Rng rng(2024);
  Eigen::MatrixXd m(10, 10);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) m(i, j) = rng.uniform01() * 2.0 - 1.0;
  CHECK(effective_rank(m) == Approx(erank_oracle(m)).margin(1e-6));
  // scale invariance
  CHECK(effective_rank(3.7 * m) == Approx(effective_rank(m)).margin(1e-10));
}

// ----------------------------------------------------------------- posdis ---

TEST_CASE("posdis is 1 on bijective per-position codes", "[metricscomp]") {
  std::vector<std::vector<std::string>> msgs, attrs;
  for (const auto& a : {"x", "y"})
    for (const auto& b : {"u", "v"}) {
      msgs.push_back({std::string("A") + a, std::string("B") + b});
      attrs.push_back({a, b});
    }
  CHECK(posdis(msgs, attrs) == Approx(1.0).margin(1e-12));
}

TEST_CASE("posdis matches a hand-computed mixed fixture", "[metricscomp]") {
  // items over attributes (a, b) in {x,y} x {u,v}; four message positions:
  //   pos0 = code(a)            -> contribution 1
  //   pos1 = xor(a, b)          -> both MIs zero -> 0
  //   pos2 = b with one flip    -> tied MIs 0.3113 -> 0
  //   pos3 = partial code of b  -> (1.0 - 0.5)/1.5 = 1/3
  // posdis = (1 + 0 + 0 + 1/3)/4 = 1/3
  std::vector<std::vector<std::string>> msgs{
      {"A", "0", "u2", "p"},
      {"A", "1", "v2", "q"},
      {"B", "1", "u2", "p"},
      {"B", "0", "u2", "r"}};
  std::vector<std::vector<std::string>> attrs{
      {"x", "u"}, {"x", "v"}, {"y", "u"}, {"y", "v"}};
  CHECK(posdis(msgs, attrs) == Approx(1.0 / 3.0).margin(1e-9));
}

TEST_CASE("posdis rejects degenerate inputs", "[metricscomp]") {
  std::vector<std::vector<std::string>> constant(4, {"k", "k"});
  std::vector<std::vector<std::string>> attrs{
      {"x", "u"}, {"x", "v"}, {"y", "u"}, {"y", "v"}};
  CHECK_THROWS_AS(posdis(constant, attrs), std::invalid_argument);
  std::vector<std::vector<std::string>> one_attr(4, std::vector<std::string>{"x"});
  std::vector<std::vector<std::string>> msgs(4, {"a", "b"});
  msgs[0][0] = "c";
  CHECK_THROWS_AS(posdis(msgs, one_attr), std::invalid_argument);
  std::vector<std::vector<std::string>> empty_msgs(4, std::vector<std::string>{});
  CHECK_THROWS_AS(posdis(empty_msgs, attrs), std::invalid_argument);
}

TEST_CASE("posdis stays within [0, 1] on random codes", "[metricscomp]") {
  Rng rng(3131);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::vector<std::string>> msgs, attrs;
    for (int i = 0; i < 24; ++i) {
      std::vector<std::string> m, a;
      for (int j = 0; j < 4; ++j)
        m.push_back(std::to_string(rng.below(3)));
      for (int j = 0; j < 3; ++j)
        a.push_back(std::to_string(rng.below(2)));
      msgs.push_back(m);
      attrs.push_back(a);
    }
    try {
      const double v = posdis(msgs, attrs);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    } catch (const std::invalid_argument&) {
      // all-constant positions are a legal throw
    }
  }
}

// -------------------------------------------------------------- dashboard ---

TEST_CASE("collapse shows in erank while topsim degenerates", "[metricscomp]") {
  // forms collapse to one template: sigma hits the degenerate marker while
  // eRank_form falls to exactly 1 -- the diagnostic catches what sigma hides
  std::vector<MeaningFrame> ms;
  std::vector<FormTemplate> fs;
  for (int i = 0; i < 8; ++i) {
    ms.push_back(frame("p" + std::to_string(i), "c" + std::to_string(i % 4),
                       {{"ARG0", "f" + std::to_string(i),
                         "k" + std::to_string(i % 3)}}));
    fs.push_back(tpl({"s", "v", "o"}));
  }
  const auto rep = topsim(ms, fs, 200);
  CHECK(rep.degenerate);
  CHECK(effective_rank(form_matrix(fs)) == Approx(1.0).margin(1e-9));
  CHECK(effective_rank(meaning_matrix(ms)) > 2.0);
}

TEST_CASE("diagnostics report and dashboard csv", "[metricscomp]") {
  std::vector<MeaningFrame> ms;
  std::vector<FormTemplate> fs;
  for (int i = 0; i < 6; ++i) {
    ms.push_back(frame("p" + std::to_string(i % 3), "c" + std::to_string(i % 3),
                       {{"ARG0", "x", "k" + std::to_string(i % 2)},
                        {"ARG1", "y", "m" + std::to_string(i % 3)}}));
    std::vector<std::string> slots{"s", "v"};
    if (i % 2) slots.push_back("o");
    if (i % 3 == 0) slots.push_back("p");
    fs.push_back(tpl(slots));
  }
  const auto rep = diagnostics_report(ms, fs);
  CHECK(rep.erank_meaning >= 1.0);
  CHECK(rep.erank_form >= 1.0);
  CHECK(rep.posdis_value >= 0.0);
  CHECK(rep.posdis_value <= 1.0);
  CHECK(rep.unique_messages == 4);

  std::vector<DashboardRow> rows(2);
  rows[0] = {"run_a", 0, 0.41,         rep.erank_meaning, rep.erank_form,
             rep.posdis_value, 2.5,  0.003,             rep.unique_messages};
  rows[1] = {"run_a", 1, std::nullopt, 2.0,               1.0,
             std::nullopt,    0.0,  1.0,               1};
  const auto table = dashboard_table(rows);
  REQUIRE(table.header.size() == 9);
  CHECK(table.header[0] == "run");
  CHECK(table.header[2] == "sigma");
  REQUIRE(table.rows.size() == 2);
  CHECK(table.rows[0][1] == "0");
  CHECK(table.rows[1][2] == "degenerate");
  CHECK(table.rows[1][5] == "");
  CHECK(table.rows[0][8] == "4");
}
