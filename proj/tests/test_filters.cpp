#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "itlab/corpus.hpp"
#include "itlab/csv.hpp"
#include "itlab/filters.hpp"
#include "itlab/grammar.hpp"
#include "itlab/ngram.hpp"
#include "itlab/rng.hpp"
#include "itlab/stats.hpp"
#include "../tests/testutil.hpp"

using namespace itlab;

namespace {

Corpus corpus_of(const std::vector<std::vector<std::string>>& passages) {
  Corpus c;
  for (std::size_t i = 0; i < passages.size(); ++i) {
    Passage p;
    p.id = "p" + std::to_string(i);
    p.tokens = passages[i];
    c.passages.push_back(std::move(p));
  }
  return c;
}

// n passages with token counts 1..n, ids p0..p(n-1).
Corpus length_ladder(std::size_t n) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t len = 1; len <= n; ++len)
    rows.emplace_back(len, "tok");
  return corpus_of(rows);
}

PassageScorer length_scorer() {
  return [](const Passage& p) {
    QualityScore q;
    q.passage_id = p.id;
    q.score = double(p.tokens.size());
    q.components["length"] = q.score;
    return q;
  };
}

std::set<std::string> ids_of(const Corpus& c) {
  std::set<std::string> ids;
  for (const auto& p : c.passages) ids.insert(p.id);
  return ids;
}

}  // namespace

TEST_CASE("filter spec and precondition validation", "[filters]") {
  FilterSpec spec;
  spec.retain_fraction = 0.0;
  REQUIRE_THROWS_AS(validate_filter_spec(spec), std::invalid_argument);
  spec.retain_fraction = 1.0001;
  REQUIRE_THROWS_AS(validate_filter_spec(spec), std::invalid_argument);
  spec = FilterSpec{};
  spec.condition = FilterCondition::quality;  // no scorer attached
  REQUIRE_THROWS_AS(validate_filter_spec(spec), std::invalid_argument);
  spec.scorer = length_scorer();
  REQUIRE_NOTHROW(validate_filter_spec(spec));

  Rng rng(1);
  FilterSpec tiny;
  tiny.condition = FilterCondition::random;
  tiny.retain_fraction = 0.5;
  REQUIRE_THROWS_AS(apply_filter(length_ladder(1), tiny, rng),
                    std::invalid_argument);  // 1 * 0.5 < 1

  REQUIRE_THROWS_AS(aggregate_components({}, ScoreAggregation::mean),
                    std::invalid_argument);
  const std::map<std::string, double> comp = {{"a", 1.0}, {"b", 3.0}};
  REQUIRE(aggregate_components(comp, ScoreAggregation::mean) == 2.0);
  REQUIRE(aggregate_components(comp, ScoreAggregation::min) == 1.0);
  REQUIRE(aggregate_components(comp, ScoreAggregation::max) == 3.0);
}

TEST_CASE("condition none is the identity", "[filters]") {
  const Corpus c = length_ladder(5);
  Rng rng(2);
  FilterSpec spec;
  spec.condition = FilterCondition::none;
  spec.retain_fraction = 0.4;  // irrelevant under none
  REQUIRE(testutil::corpora_equal(apply_filter(c, spec, rng), c));
}

TEST_CASE("random filtering takes a uniform subset of the right size",
          "[filters]") {
  const Corpus c = length_ladder(10);
  FilterSpec spec;
  spec.condition = FilterCondition::random;
  spec.retain_fraction = 0.7;

  Rng r1(42);
  const Corpus kept = apply_filter(c, spec, r1);
  REQUIRE(kept.passages.size() == 7);  // ceil guard: 0.7*10 is exactly 7

  // Subset of the input, original order preserved.
  const auto all = ids_of(c);
  std::vector<std::string> order;
  for (const auto& p : kept.passages) {
    REQUIRE(all.count(p.id) == 1);
    order.push_back(p.id);
  }
  std::vector<std::string> by_position;
  for (const auto& p : c.passages)
    if (ids_of(kept).count(p.id)) by_position.push_back(p.id);
  REQUIRE(order == by_position);

  // Deterministic per seed.
  Rng r2(42), r3(43);
  REQUIRE(testutil::corpora_equal(apply_filter(c, spec, r2), kept));
  bool any_diff = false;
  for (int s = 0; s < 5 && !any_diff; ++s) {
    Rng alt(100 + s);
    any_diff = !testutil::corpora_equal(apply_filter(c, spec, alt), kept);
  }
  REQUIRE(any_diff);

  // Fraction 1 retains everything: random degenerates to none.
  spec.retain_fraction = 1.0;
  Rng r4(7);
  REQUIRE(testutil::corpora_equal(apply_filter(c, spec, r4), c));

  // Rounding up: 0.75 of 10 keeps 8.
  spec.retain_fraction = 0.75;
  Rng r5(8);
  REQUIRE(apply_filter(c, spec, r5).passages.size() == 8);
}

TEST_CASE("quality filtering keeps the top scorers", "[filters]") {
  // Lengths 1..10 in shuffled corpus order; the 5 longest must survive.
  std::vector<std::vector<std::string>> rows;
  for (std::size_t len : {7, 2, 9, 4, 1, 10, 3, 8, 5, 6})
    rows.emplace_back(len, "tok");
  const Corpus c = corpus_of(rows);

  FilterSpec spec;
  spec.condition = FilterCondition::quality;
  spec.retain_fraction = 0.5;
  spec.scorer = length_scorer();
  Rng rng(3);
  const Corpus kept = apply_filter(c, spec, rng);
  REQUIRE(kept.passages.size() == 5);
  std::multiset<std::size_t> lengths;
  for (const auto& p : kept.passages) lengths.insert(p.tokens.size());
  REQUIRE(lengths == std::multiset<std::size_t>{6, 7, 8, 9, 10});

  // Original corpus order is preserved among the retained.
  std::vector<std::size_t> seen;
  for (const auto& p : kept.passages) seen.push_back(p.tokens.size());
  REQUIRE(seen == std::vector<std::size_t>{7, 9, 10, 8, 6});

  // Boundary ties break toward the smaller passage id.
  const Corpus tied = corpus_of({{"t", "t", "t", "t", "t"},
                                 {"t", "t", "t"},
                                 {"t", "t", "t"},
                                 {"t"}});
  const Corpus kept2 = apply_filter(tied, spec, rng);
  REQUIRE(kept2.passages.size() == 2);
  REQUIRE(kept2.passages[0].id == "p0");  // length 5
  REQUIRE(kept2.passages[1].id == "p1");  // the smaller-id length-3 passage
}

TEST_CASE("quality never retains below a discarded passage", "[filters]") {
  Rng score_rng(404);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 5 + score_rng.below(26);
    Corpus c;
    std::map<std::string, double> score_by_id;
    for (std::size_t i = 0; i < n; ++i) {
      Passage p;
      p.id = "p" + std::to_string(i);
      p.tokens = {"tok"};
      // Coarse grid forces score ties between passages.
      score_by_id[p.id] = double(score_rng.below(6));
      c.passages.push_back(std::move(p));
    }
    FilterSpec spec;
    spec.condition = FilterCondition::quality;
    spec.retain_fraction = 0.3 + 0.7 * score_rng.uniform01();
    spec.scorer = [&score_by_id](const Passage& p) {
      QualityScore q;
      q.passage_id = p.id;
      q.score = score_by_id.at(p.id);
      return q;
    };
    Rng rng(trial);
    const Corpus kept = apply_filter(c, spec, rng);
    const auto kept_ids = ids_of(kept);
    double min_kept = 1e18, max_dropped = -1e18;
    for (const auto& p : c.passages) {
      const double s = score_by_id.at(p.id);
      if (kept_ids.count(p.id))
        min_kept = std::min(min_kept, s);
      else
        max_dropped = std::max(max_dropped, s);
    }
    if (kept.passages.size() < c.passages.size())
      REQUIRE(min_kept >= max_dropped);
  }
}

TEST_CASE("random and quality retain identical volumes", "[filters]") {
  for (double f : {0.3, 0.5, 0.7, 0.9, 1.0}) {
    for (std::size_t n : {std::size_t(7), std::size_t(10)}) {
      const Corpus c = length_ladder(n);
      FilterSpec random_spec;
      random_spec.condition = FilterCondition::random;
      random_spec.retain_fraction = f;
      FilterSpec quality_spec;
      quality_spec.condition = FilterCondition::quality;
      quality_spec.retain_fraction = f;
      quality_spec.scorer = length_scorer();
      Rng r1(9), r2(9);
      REQUIRE(apply_filter(c, random_spec, r1).passages.size() ==
              apply_filter(c, quality_spec, r2).passages.size());
    }
  }
}

TEST_CASE("reference likelihood is the normalized sequence score",
          "[filters]") {
  const auto ref =
      fit_ngram(make_ngram_template(2, 0.01), corpus_of({{"a", "b", "a"}}));

  // One token: score equals its start-context log-probability.
  Passage single;
  single.id = "solo";
  single.tokens = {"a"};
  const QualityScore q = reference_likelihood_score(single, ref);
  REQUIRE(q.passage_id == "solo");
  REQUIRE_THAT(q.score,
               Catch::Matchers::WithinAbs(std::log(1.01 / 1.02), 1e-12));
  REQUIRE(q.components.at("reference_likelihood") == q.score);

  // Length normalization: per-token average, so id relabeling and repeated
  // content leave the per-token score unchanged.
  Passage renamed = single;
  renamed.id = "other-name";
  REQUIRE(reference_likelihood_score(renamed, ref).score == q.score);

  Passage pair;
  pair.id = "two";
  pair.tokens = {"a", "b"};
  const double expected =
      (std::log(1.01 / 1.02) + std::log(1.01 / 1.02)) / 2.0;
  REQUIRE_THAT(reference_likelihood_score(pair, ref).score,
               Catch::Matchers::WithinAbs(expected, 1e-12));
}

TEST_CASE("reference text outscores token noise", "[filters]") {
  const auto grammar = load_grammar_file(std::string(ITLAB_SOURCE_DIR) +
                                         "/data/grammars/default.grammar");
  Rng gen_rng(71);
  const auto seed = generate_seed(grammar, 120, gen_rng);
  const auto ref = fit_ngram(make_ngram_template(3, 0.01), seed.corpus);
  const std::size_t v = ref.vocab.size();
  REQUIRE(v >= 20);

  Rng mc_rng(72);
  const SamplerConfig cfg{1.0, 1.0, 30, 5};
  std::size_t wins = 0;
  const std::size_t pairs = 1000;
  for (std::size_t i = 0; i < pairs; ++i) {
    const auto& prompt_src =
        seed.corpus.passages[i % seed.corpus.passages.size()].tokens;
    Passage real = sample_continuation(ref, {prompt_src[0]}, cfg, mc_rng);
    real.id = "real";
    Passage noise;
    noise.id = "noise";
    for (std::size_t t = 0; t < real.tokens.size(); ++t)
      noise.tokens.push_back(ref.vocab[mc_rng.below(v)]);
    if (reference_likelihood_score(real, ref).score >
        reference_likelihood_score(noise, ref).score)
      ++wins;
  }
  REQUIRE(sign_test_p(wins, pairs) < 0.01);
}

TEST_CASE("cloze recoverability counts top-ranked deletions", "[filters]") {
  // Degenerate repeated token: always recovered.
  const Corpus rep = corpus_of({{"a", "a", "a", "a", "a"}});
  const auto ref_rep = fit_ngram(make_ngram_template(2, 0.01), rep);
  Passage p = rep.passages[0];
  ClozeSpec one;
  one.deletions = 1;
  REQUIRE(recoverability_score(p, one, ref_rep).score == 1.0);

  // Too few tokens for the probe.
  ClozeSpec four;
  four.deletions = 4;
  REQUIRE_THROWS_AS(recoverability_score(p, four, ref_rep),
                    std::invalid_argument);
  ClozeSpec three;
  three.deletions = 3;
  REQUIRE_NOTHROW(recoverability_score(p, three, ref_rep));  // len == k+2

  REQUIRE_THROWS_AS(recoverability_score(p, ClozeSpec{0, 5}, ref_rep),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(recoverability_score(p, ClozeSpec{1, 0}, ref_rep),
                    std::invalid_argument);

  // Hand-computed positions: len 6, k 2 deletes positions 1 and 3. With an
  // out-of-vocabulary token at position 1 and top-1 scoring, only the
  // position-3 deletion is recovered.
  const auto ref_ab = fit_ngram(make_ngram_template(2, 0.01),
                                corpus_of({{"a", "b", "a", "b", "a", "b"}}));
  Passage probe_pass;
  probe_pass.id = "probe";
  probe_pass.tokens = {"a", "z", "a", "b", "a", "b"};
  ClozeSpec strict;
  strict.deletions = 2;
  strict.top_n = 1;
  const QualityScore qs = recoverability_score(probe_pass, strict, ref_ab);
  REQUIRE_THAT(qs.score, Catch::Matchers::WithinAbs(0.5, 1e-12));
  REQUIRE(qs.components.at("recoverability") == qs.score);

  // Fully in-distribution passage at top-1: both deletions recovered.
  Passage clean;
  clean.id = "clean";
  clean.tokens = {"a", "b", "a", "b", "a", "b"};
  REQUIRE(recoverability_score(clean, strict, ref_ab).score == 1.0);

  // Deterministic: identical calls, identical scores.
  REQUIRE(recoverability_score(probe_pass, strict, ref_ab).score ==
          recoverability_score(probe_pass, strict, ref_ab).score);
}

TEST_CASE("trained reference recovers more than a uniform one", "[filters]") {
  const auto grammar = load_grammar_file(std::string(ITLAB_SOURCE_DIR) +
                                         "/data/grammars/default.grammar");
  Rng gen_rng(73);
  const auto seed = generate_seed(grammar, 500, gen_rng);
  const auto trained = fit_ngram(make_ngram_template(3, 0.01), seed.corpus);

  // Uniform reference: every vocabulary token observed exactly once under an
  // order-1 template, so every next-token probability is 1/V.
  Corpus flat;
  Passage all;
  all.id = "flat";
  all.tokens = trained.vocab;
  flat.passages.push_back(all);
  const auto uniform = fit_ngram(make_ngram_template(1, 0.01), flat);

  const ClozeSpec probe;  // k = 3, top-5
  double mean_trained = 0.0, mean_uniform = 0.0;
  for (const auto& p : seed.corpus.passages) {
    mean_trained += recoverability_score(p, probe, trained).score;
    mean_uniform += recoverability_score(p, probe, uniform).score;
  }
  mean_trained /= double(seed.corpus.passages.size());
  mean_uniform /= double(seed.corpus.passages.size());
  REQUIRE(mean_trained > mean_uniform + 0.1);
  REQUIRE(mean_uniform < 0.25);  // top-5 of a uniform reference is guesswork
}

TEST_CASE("surrogate scorer aggregates both components", "[filters]") {
  const auto ref = fit_ngram(make_ngram_template(2, 0.01),
                             corpus_of({{"a", "b", "a", "b", "a", "b"}}));
  Passage p;
  p.id = "x";
  p.tokens = {"a", "b", "a", "b", "a"};

  const auto scorer = surrogate_scorer(ref);
  const QualityScore q = scorer(p);
  REQUIRE(q.passage_id == "x");
  REQUIRE(q.components.size() == 2);
  const double lik = reference_likelihood_score(p, ref).score;
  const double rec = recoverability_score(p, ClozeSpec{}, ref).score;
  REQUIRE_THAT(q.components.at("reference_likelihood"),
               Catch::Matchers::WithinAbs(lik, 1e-15));
  REQUIRE_THAT(q.components.at("recoverability"),
               Catch::Matchers::WithinAbs(rec, 1e-15));
  REQUIRE_THAT(q.score, Catch::Matchers::WithinAbs((lik + rec) / 2.0, 1e-15));

  const auto min_scorer =
      surrogate_scorer(ref, ClozeSpec{}, ScoreAggregation::min);
  REQUIRE(min_scorer(p).score == std::min(lik, rec));
}

TEST_CASE("scores export to csv for audit", "[filters]") {
  QualityScore a;
  a.passage_id = "p1";
  a.score = 0.5;
  a.components = {{"reference_likelihood", -1.25}, {"recoverability", 0.75}};
  QualityScore b;
  b.passage_id = "p2";
  b.score = 1.0;
  b.components = {{"recoverability", 1.0}};

  testutil::TempDir dir;
  const std::string path = dir.file("scores.csv");
  write_scores_csv(path, {a, b});

  const auto t = csv::read_table_file(path);
  REQUIRE(t.header == std::vector<std::string>{
                          "passage", "total", "recoverability",
                          "reference_likelihood"});
  REQUIRE(t.rows.size() == 2);
  REQUIRE(t.rows[0][0] == "p1");
  REQUIRE(t.rows[0][1] == "0.5");
  REQUIRE(t.rows[0][2] == "0.75");
  REQUIRE(t.rows[0][3] == "-1.25");
  REQUIRE(t.rows[1][0] == "p2");
  REQUIRE(t.rows[1][3] == "");  // component absent for this passage
}
