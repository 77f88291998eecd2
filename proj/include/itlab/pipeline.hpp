#pragma once
// Transmission-chain orchestrator: iterated sample -> filter -> refit loops
// over pluggable text generators, with per-generation metrics, deterministic
// derived rng substreams, run-directory persistence, cross-condition
// statistics, and convergence summaries.
//
// Substream contract (stable, so runs can be reproduced piecewise):
//   Rng::derive(master_seed, {seed_run, generation, purpose[, index]})
// with the purpose constants below. Passage sampling draws one stream per
// passage index, so within-generation work is order-free and parallelizable
// without changing outputs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bayes.hpp"
#include "config.hpp"
#include "constructions.hpp"
#include "corpus.hpp"
#include "corpus_io.hpp"
#include "csv.hpp"
#include "endpoint_client.hpp"
#include "filters.hpp"
#include "grammar.hpp"
#include "metrics_comp.hpp"
#include "morphology.hpp"
#include "ngram.hpp"
#include "rng.hpp"
#include "sampler.hpp"
#include "stats.hpp"
#include "zipf.hpp"

namespace itlab {

// rng substream purposes
inline constexpr std::uint64_t kStreamSeedCorpus = 0;
inline constexpr std::uint64_t kStreamSample = 1;  // + passage index
inline constexpr std::uint64_t kStreamFilter = 2;
inline constexpr std::uint64_t kStreamTopsim = 3;
inline constexpr std::uint64_t kStreamCompare = 100;  // + pair, metric index

// ------------------------------------------------------------ enum names ---

enum class LearnerKind { ngram, endpoint };

inline const char* learner_kind_name(LearnerKind k) {
  switch (k) {
    case LearnerKind::ngram: return "ngram";
    case LearnerKind::endpoint: return "endpoint";
  }
  throw std::logic_error("learner_kind_name: bad enum value");
}

inline LearnerKind learner_kind_from_name(const std::string& s) {
  if (s == "ngram") return LearnerKind::ngram;
  if (s == "endpoint") return LearnerKind::endpoint;
  throw std::invalid_argument("learner kind '" + s +
                              "' is not one of ngram/endpoint");
}

inline const char* condition_name(FilterCondition c) {
  switch (c) {
    case FilterCondition::none: return "none";
    case FilterCondition::random: return "random";
    case FilterCondition::quality: return "quality";
  }
  throw std::logic_error("condition_name: bad enum value");
}

inline FilterCondition condition_from_name(const std::string& s) {
  if (s == "none") return FilterCondition::none;
  if (s == "random") return FilterCondition::random;
  if (s == "quality") return FilterCondition::quality;
  throw std::invalid_argument("filter condition '" + s +
                              "' is not one of none/random/quality");
}

inline const char* aggregation_name(ScoreAggregation a) {
  switch (a) {
    case ScoreAggregation::mean: return "mean";
    case ScoreAggregation::min: return "min";
    case ScoreAggregation::max: return "max";
  }
  throw std::logic_error("aggregation_name: bad enum value");
}

inline ScoreAggregation aggregation_from_name(const std::string& s) {
  if (s == "mean") return ScoreAggregation::mean;
  if (s == "min") return ScoreAggregation::min;
  if (s == "max") return ScoreAggregation::max;
  throw std::invalid_argument("score aggregation '" + s +
                              "' is not one of mean/min/max");
}

inline const char* tokenizer_scheme_name(TokenizerScheme t) {
  switch (t) {
    case TokenizerScheme::whitespace: return "whitespace";
    case TokenizerScheme::unicode_word: return "unicode_word";
  }
  throw std::logic_error("tokenizer_scheme_name: bad enum value");
}

inline TokenizerScheme tokenizer_scheme_from_name(const std::string& s) {
  if (s == "whitespace") return TokenizerScheme::whitespace;
  if (s == "unicode_word") return TokenizerScheme::unicode_word;
  throw std::invalid_argument("tokenizer scheme '" + s +
                              "' is not one of whitespace/unicode_word");
}

// ------------------------------------------------------------ run config ---

struct LearnerSpec {
  LearnerKind kind = LearnerKind::ngram;
  int order = 3;        // n-gram order (also the quality-reference learner)
  double add_k = 0.01;  // add-k smoothing
  EndpointSpec endpoint;  // used iff kind == endpoint
};

struct MetricSelection {
  bool zipf = true;
  bool diversity = true;
  bool regularity = true;
  bool topsim = false;
  bool diagnostics = false;
  std::string paradigm_path;   // required iff regularity
  std::string inventory_path;  // required iff diversity
  // topsim cost caps: evenly spaced subsample of recognized frames, and the
  // Mantel permutation budget
  std::size_t topsim_max_items = 64;
  std::uint64_t topsim_permutations = 200;
};

struct SeedSpec {
  std::string grammar_path;  // generation-0 generator + recognizer + triggers
  std::string corpus_path;   // optional passage-lines file; overrides generation
  std::size_t passages = 200;
  std::size_t min_tokens = 100;
  std::size_t max_tokens = 300;
};

struct PipelineConfig {
  LearnerSpec learner;
  SamplerConfig sampler;
  std::size_t generations = 10;
  std::size_t passages_per_generation = 2000;  // bottleneck width
  FilterSpec filter;  // scorer field is ignored; injected per chain
  ScoreAggregation filter_aggregation = ScoreAggregation::mean;
  ClozeSpec filter_probe;
  SeedSpec seed;
  std::size_t seed_runs = 5;
  std::uint64_t master_seed = 0;
  MetricSelection metrics;
  std::string run_dir;  // persistence root; empty = in-memory only
};

inline void validate_pipeline_config(const PipelineConfig& c) {
  if (c.learner.order < 1)
    throw std::invalid_argument("pipeline: learner order must be >= 1");
  if (!(c.learner.add_k >= 0.0))
    throw std::invalid_argument("pipeline: add_k must be >= 0");
  if (c.learner.kind == LearnerKind::endpoint)
    validate_endpoint_spec(c.learner.endpoint);
  validate_sampler_config(c.sampler);
  if (c.passages_per_generation < 10)
    throw std::invalid_argument(
        "pipeline: passages per generation must be >= 10");
  if (c.seed_runs < 1)
    throw std::invalid_argument("pipeline: seed runs must be >= 1");
  if (!(c.filter.retain_fraction > 0.0) || c.filter.retain_fraction > 1.0)
    throw std::invalid_argument(
        "pipeline: retain fraction must be in (0, 1]");
  if (double(c.passages_per_generation) * c.filter.retain_fraction < 1.0)
    throw std::invalid_argument(
        "pipeline: retain fraction keeps no passage at this width");
  if (c.filter.condition == FilterCondition::quality) {
    if (c.filter_probe.deletions < 1)
      throw std::invalid_argument("pipeline: cloze deletions must be >= 1");
    if (c.filter_probe.top_n < 1)
      throw std::invalid_argument("pipeline: cloze top_n must be >= 1");
  }
  if (c.seed.corpus_path.empty()) {
    if (c.seed.grammar_path.empty())
      throw std::invalid_argument(
          "pipeline: seed needs a grammar or a corpus file");
    if (c.seed.passages < 10)
      throw std::invalid_argument("pipeline: seed passages must be >= 10");
    if (c.seed.min_tokens < 1 || c.seed.max_tokens < c.seed.min_tokens)
      throw std::invalid_argument("pipeline: bad seed passage length bounds");
  }
  const bool needs_recognition =
      c.metrics.diversity || c.metrics.topsim || c.metrics.diagnostics;
  if (needs_recognition && c.seed.grammar_path.empty())
    throw std::invalid_argument(
        "pipeline: diversity/topsim/diagnostics metrics need a grammar for "
        "sentence recognition");
  if (c.metrics.diversity && c.metrics.inventory_path.empty())
    throw std::invalid_argument(
        "pipeline: diversity metric needs an inventory file");
  if (c.metrics.regularity && c.metrics.paradigm_path.empty())
    throw std::invalid_argument(
        "pipeline: regularity metric needs a paradigm file");
  if (c.metrics.topsim) {
    if (c.metrics.topsim_max_items < 4)
      throw std::invalid_argument("pipeline: topsim item cap must be >= 4");
    if (c.metrics.topsim_permutations < 1)
      throw std::invalid_argument(
          "pipeline: topsim permutations must be >= 1");
  }
}

// ---------------------------------------------------------- flat schema ---

inline const std::set<std::string>& pipeline_config_keys() {
  static const std::set<std::string> keys = {
      "learner.kind", "learner.order", "learner.add_k",
      "endpoint.base_url", "endpoint.path", "endpoint.token_env",
      "endpoint.timeout_ms", "endpoint.max_attempts", "endpoint.max_in_flight",
      "endpoint.tokenizer",
      "sampler.temperature", "sampler.nucleus_p", "sampler.max_tokens",
      "sampler.prompt_tokens",
      "chain.generations", "chain.passages_per_generation", "chain.seed_runs",
      "chain.master_seed",
      "filter.condition", "filter.retain_fraction", "filter.aggregation",
      "filter.cloze_deletions", "filter.cloze_top_n",
      "seed.grammar", "seed.corpus", "seed.passages", "seed.min_tokens",
      "seed.max_tokens",
      "metrics.zipf", "metrics.diversity", "metrics.regularity",
      "metrics.topsim", "metrics.diagnostics", "metrics.paradigm",
      "metrics.inventory", "metrics.topsim_items",
      "metrics.topsim_permutations",
  };
  return keys;
}

inline cfg::FlatConfig pipeline_config_to_flat(const PipelineConfig& c) {
  cfg::FlatConfig f;
  const auto num = [](double v) { return format_double(v); };
  f.set("learner.kind", learner_kind_name(c.learner.kind));
  f.set("learner.order", std::to_string(c.learner.order));
  f.set("learner.add_k", num(c.learner.add_k));
  f.set("endpoint.base_url", c.learner.endpoint.base_url);
  f.set("endpoint.path", c.learner.endpoint.path);
  f.set("endpoint.token_env", c.learner.endpoint.token_env);
  f.set("endpoint.timeout_ms", std::to_string(c.learner.endpoint.timeout_ms));
  f.set("endpoint.max_attempts",
        std::to_string(c.learner.endpoint.max_attempts));
  f.set("endpoint.max_in_flight",
        std::to_string(c.learner.endpoint.max_in_flight));
  f.set("endpoint.tokenizer",
        tokenizer_scheme_name(c.learner.endpoint.tokenizer));
  f.set("sampler.temperature", num(c.sampler.temperature));
  f.set("sampler.nucleus_p", num(c.sampler.nucleus_p));
  f.set("sampler.max_tokens", std::to_string(c.sampler.max_tokens));
  f.set("sampler.prompt_tokens", std::to_string(c.sampler.prompt_tokens));
  f.set("chain.generations", std::to_string(c.generations));
  f.set("chain.passages_per_generation",
        std::to_string(c.passages_per_generation));
  f.set("chain.seed_runs", std::to_string(c.seed_runs));
  f.set("chain.master_seed", std::to_string(c.master_seed));
  f.set("filter.condition", condition_name(c.filter.condition));
  f.set("filter.retain_fraction", num(c.filter.retain_fraction));
  f.set("filter.aggregation", aggregation_name(c.filter_aggregation));
  f.set("filter.cloze_deletions", std::to_string(c.filter_probe.deletions));
  f.set("filter.cloze_top_n", std::to_string(c.filter_probe.top_n));
  f.set("seed.grammar", c.seed.grammar_path);
  f.set("seed.corpus", c.seed.corpus_path);
  f.set("seed.passages", std::to_string(c.seed.passages));
  f.set("seed.min_tokens", std::to_string(c.seed.min_tokens));
  f.set("seed.max_tokens", std::to_string(c.seed.max_tokens));
  const auto onoff = [](bool b) { return b ? "true" : "false"; };
  f.set("metrics.zipf", onoff(c.metrics.zipf));
  f.set("metrics.diversity", onoff(c.metrics.diversity));
  f.set("metrics.regularity", onoff(c.metrics.regularity));
  f.set("metrics.topsim", onoff(c.metrics.topsim));
  f.set("metrics.diagnostics", onoff(c.metrics.diagnostics));
  f.set("metrics.paradigm", c.metrics.paradigm_path);
  f.set("metrics.inventory", c.metrics.inventory_path);
  f.set("metrics.topsim_items", std::to_string(c.metrics.topsim_max_items));
  f.set("metrics.topsim_permutations",
        std::to_string(c.metrics.topsim_permutations));
  return f;
}

namespace detail {

inline int flat_int(const cfg::FlatConfig& f, const std::string& key,
                    int fallback) {
  const std::uint64_t v = cfg::get_u64(f, key, std::uint64_t(fallback));
  if (v > std::uint64_t(std::numeric_limits<int>::max()))
    throw std::invalid_argument("config: key '" + key + "' is out of range");
  return int(v);
}

}  // namespace detail

inline PipelineConfig pipeline_config_from_flat(const cfg::FlatConfig& f) {
  cfg::reject_unknown_keys(f, pipeline_config_keys());
  PipelineConfig c;
  c.learner.kind =
      learner_kind_from_name(cfg::get_string(f, "learner.kind", "ngram"));
  c.learner.order = detail::flat_int(f, "learner.order", c.learner.order);
  c.learner.add_k = cfg::get_double(f, "learner.add_k", c.learner.add_k);
  auto& ep = c.learner.endpoint;
  ep.base_url = cfg::get_string(f, "endpoint.base_url", ep.base_url);
  ep.path = cfg::get_string(f, "endpoint.path", ep.path);
  ep.token_env = cfg::get_string(f, "endpoint.token_env", ep.token_env);
  ep.timeout_ms = detail::flat_int(f, "endpoint.timeout_ms", ep.timeout_ms);
  ep.max_attempts =
      detail::flat_int(f, "endpoint.max_attempts", ep.max_attempts);
  ep.max_in_flight =
      detail::flat_int(f, "endpoint.max_in_flight", ep.max_in_flight);
  ep.tokenizer = tokenizer_scheme_from_name(
      cfg::get_string(f, "endpoint.tokenizer", tokenizer_scheme_name(ep.tokenizer)));
  c.sampler.temperature =
      cfg::get_double(f, "sampler.temperature", c.sampler.temperature);
  c.sampler.nucleus_p =
      cfg::get_double(f, "sampler.nucleus_p", c.sampler.nucleus_p);
  c.sampler.max_tokens =
      detail::flat_int(f, "sampler.max_tokens", c.sampler.max_tokens);
  c.sampler.prompt_tokens =
      detail::flat_int(f, "sampler.prompt_tokens", c.sampler.prompt_tokens);
  c.generations = cfg::get_u64(f, "chain.generations", c.generations);
  c.passages_per_generation = cfg::get_u64(f, "chain.passages_per_generation",
                                           c.passages_per_generation);
  c.seed_runs = cfg::get_u64(f, "chain.seed_runs", c.seed_runs);
  c.master_seed = cfg::get_u64(f, "chain.master_seed", c.master_seed);
  c.filter.condition =
      condition_from_name(cfg::get_string(f, "filter.condition", "none"));
  c.filter.retain_fraction =
      cfg::get_double(f, "filter.retain_fraction", c.filter.retain_fraction);
  c.filter_aggregation =
      aggregation_from_name(cfg::get_string(f, "filter.aggregation", "mean"));
  c.filter_probe.deletions =
      detail::flat_int(f, "filter.cloze_deletions", c.filter_probe.deletions);
  c.filter_probe.top_n =
      detail::flat_int(f, "filter.cloze_top_n", c.filter_probe.top_n);
  c.seed.grammar_path = cfg::get_string(f, "seed.grammar", "");
  c.seed.corpus_path = cfg::get_string(f, "seed.corpus", "");
  c.seed.passages = cfg::get_u64(f, "seed.passages", c.seed.passages);
  c.seed.min_tokens = cfg::get_u64(f, "seed.min_tokens", c.seed.min_tokens);
  c.seed.max_tokens = cfg::get_u64(f, "seed.max_tokens", c.seed.max_tokens);
  c.metrics.zipf = cfg::get_bool(f, "metrics.zipf", c.metrics.zipf);
  c.metrics.diversity =
      cfg::get_bool(f, "metrics.diversity", c.metrics.diversity);
  c.metrics.regularity =
      cfg::get_bool(f, "metrics.regularity", c.metrics.regularity);
  c.metrics.topsim = cfg::get_bool(f, "metrics.topsim", c.metrics.topsim);
  c.metrics.diagnostics =
      cfg::get_bool(f, "metrics.diagnostics", c.metrics.diagnostics);
  c.metrics.paradigm_path = cfg::get_string(f, "metrics.paradigm", "");
  c.metrics.inventory_path = cfg::get_string(f, "metrics.inventory", "");
  c.metrics.topsim_max_items =
      cfg::get_u64(f, "metrics.topsim_items", c.metrics.topsim_max_items);
  c.metrics.topsim_permutations = cfg::get_u64(
      f, "metrics.topsim_permutations", c.metrics.topsim_permutations);
  return c;
}

inline PipelineConfig parse_pipeline_config(const std::string& text) {
  return pipeline_config_from_flat(cfg::parse_flat_config(text));
}

// --------------------------------------------------------------- records ---

struct FilterAudit {
  std::size_t candidates = 0;  // |D'_n| before filtering
  std::size_t retained = 0;
  std::size_t discarded = 0;
  bool scored = false;  // quality condition ran a scorer
  double score_min = 0.0, score_mean = 0.0, score_max = 0.0;
  double retained_score_min = 0.0;  // effective acceptance threshold
};

struct GenerationRecord {
  std::size_t generation = 0;
  std::string corpus_path;  // persisted post-filter corpus ("" in-memory)
  std::size_t n_passages = 0;
  long long n_tokens = 0;
  FreqTable unigram;  // post-filter unigram table (feeds entropy, zipf, JSD)
  double unigram_entropy_bits = 0.0;
  std::optional<ZipfFit> zipf;
  std::optional<DiversityReport> diversity;
  std::optional<RegularityScore> regularity;
  std::optional<TopsimReport> topsim;
  std::optional<DiagnosticsReport> diagnostics;
  std::size_t sentences = 0;   // recognized-structure audit
  std::size_t recognized = 0;
  FilterAudit filter;
  std::vector<std::string> warnings;  // metric-level degradations
};

struct Trajectory {
  std::size_t seed_run = 0;
  std::string condition;
  std::vector<GenerationRecord> records;  // generations 0..N when complete
  bool complete = true;
  std::string error;  // first failure when incomplete
};

// Named scalar metrics usable for comparisons, convergence, and reports.
inline const std::vector<std::string>& scalar_metric_names() {
  static const std::vector<std::string> names = {
      "unigram_entropy", "zipf_alpha",   "diversity_bits", "diversity_pct",
      "regularity_rho",  "topsim_sigma", "erank_meaning",  "erank_form",
      "posdis",          "unique_messages"};
  return names;
}

inline std::optional<double> scalar_metric(const GenerationRecord& r,
                                           const std::string& name) {
  if (name == "unigram_entropy") return r.unigram_entropy_bits;
  if (name == "zipf_alpha")
    return r.zipf ? std::optional<double>(r.zipf->alpha) : std::nullopt;
  if (name == "diversity_bits")
    return r.diversity ? std::optional<double>(r.diversity->overall_bits)
                       : std::nullopt;
  if (name == "diversity_pct")
    return r.diversity && r.diversity->normalized_pct
               ? r.diversity->normalized_pct
               : std::nullopt;
  if (name == "regularity_rho")
    return r.regularity ? std::optional<double>(r.regularity->rho)
                        : std::nullopt;
  if (name == "topsim_sigma")
    return r.topsim && !r.topsim->degenerate
               ? std::optional<double>(r.topsim->sigma)
               : std::nullopt;
  if (name == "erank_meaning")
    return r.diagnostics ? std::optional<double>(r.diagnostics->erank_meaning)
                         : std::nullopt;
  if (name == "erank_form")
    return r.diagnostics ? std::optional<double>(r.diagnostics->erank_form)
                         : std::nullopt;
  if (name == "posdis")
    return r.diagnostics ? std::optional<double>(r.diagnostics->posdis_value)
                         : std::nullopt;
  if (name == "unique_messages")
    return r.diagnostics
               ? std::optional<double>(double(r.diagnostics->unique_messages))
               : std::nullopt;
  throw std::invalid_argument("scalar_metric: unknown metric '" + name + "'");
}

// ----------------------------------------------------------- csv helpers ---

inline std::vector<std::string> metric_columns() {
  return {"generation",      "passages",        "tokens",
          "vocab",           "entropy_bits",    "zipf_alpha",
          "zipf_ntail",      "diversity_bits",  "diversity_pct",
          "regularity_rho",  "topsim_sigma",    "topsim_mantel_p",
          "erank_meaning",   "erank_form",      "posdis",
          "unique_messages", "sentences",       "recognized",
          "filter_candidates", "filter_retained", "filter_discarded",
          "score_min",       "score_mean",      "score_max",
          "retained_score_min"};
}

inline std::vector<std::string> metric_row(const GenerationRecord& r) {
  const auto num = [](double v) { return format_double(v); };
  std::vector<std::string> row;
  row.push_back(std::to_string(r.generation));
  row.push_back(std::to_string(r.n_passages));
  row.push_back(std::to_string(r.n_tokens));
  row.push_back(std::to_string(r.unigram.vocab_size()));
  row.push_back(num(r.unigram_entropy_bits));
  row.push_back(r.zipf ? num(r.zipf->alpha) : "");
  row.push_back(r.zipf ? std::to_string(r.zipf->n_tail) : "");
  row.push_back(r.diversity ? num(r.diversity->overall_bits) : "");
  row.push_back(r.diversity && r.diversity->normalized_pct
                    ? num(*r.diversity->normalized_pct)
                    : "");
  row.push_back(r.regularity ? num(r.regularity->rho) : "");
  row.push_back(r.topsim && !r.topsim->degenerate ? num(r.topsim->sigma) : "");
  row.push_back(r.topsim && !r.topsim->degenerate ? num(r.topsim->mantel_p)
                                                  : "");
  row.push_back(r.diagnostics ? num(r.diagnostics->erank_meaning) : "");
  row.push_back(r.diagnostics ? num(r.diagnostics->erank_form) : "");
  row.push_back(r.diagnostics ? num(r.diagnostics->posdis_value) : "");
  row.push_back(r.diagnostics ? std::to_string(r.diagnostics->unique_messages)
                              : "");
  row.push_back(std::to_string(r.sentences));
  row.push_back(std::to_string(r.recognized));
  row.push_back(std::to_string(r.filter.candidates));
  row.push_back(std::to_string(r.filter.retained));
  row.push_back(std::to_string(r.filter.discarded));
  row.push_back(r.filter.scored ? num(r.filter.score_min) : "");
  row.push_back(r.filter.scored ? num(r.filter.score_mean) : "");
  row.push_back(r.filter.scored ? num(r.filter.score_max) : "");
  row.push_back(r.filter.scored ? num(r.filter.retained_score_min) : "");
  return row;
}

namespace detail {

inline void write_text_atomic(const std::string& path,
                              const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os)
      throw std::runtime_error("pipeline: cannot open for write: " + tmp);
    os << text;
  }
  std::filesystem::rename(tmp, path);
}

inline void write_table_atomic(const std::string& path, const csv::Table& t) {
  const std::string tmp = path + ".tmp";
  csv::write_table_file(tmp, t);
  std::filesystem::rename(tmp, path);
}

inline std::string gen_stem(std::size_t gen) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "gen-%03zu", gen);
  return buf;
}

inline std::string passage_id(std::size_t gen, std::size_t i) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "g%zu-p%06zu", gen, i);
  return buf;
}

// --------------------------------------------------------- chain resources

struct ChainResources {
  bool has_grammar = false;
  Grammar grammar;
  std::set<std::string> triggers;  // inflection-demanding cue words
  bool has_paradigm = false;
  ParadigmTable paradigm;
  std::set<std::string> controlled;
  bool has_inventory = false;
  ConstructionInventory inventory;
  QuartileDecomposition quartiles;
};

inline ChainResources load_chain_resources(const PipelineConfig& c) {
  ChainResources res;
  if (!c.seed.grammar_path.empty()) {
    res.grammar = load_grammar_file(c.seed.grammar_path);
    res.has_grammar = true;
    res.triggers = trigger_words(res.grammar);
  }
  if (res.triggers.empty()) res.triggers = {"yesterday"};
  if (c.metrics.regularity) {
    res.paradigm = load_paradigm_file(c.metrics.paradigm_path);
    res.has_paradigm = true;
    res.controlled = res.paradigm.lemmas();
  }
  if (c.metrics.diversity) {
    res.inventory = load_inventory_file(c.metrics.inventory_path);
    res.has_inventory = true;
    res.quartiles = seed_frequency_quartiles(res.inventory);
  }
  return res;
}

// ------------------------------------------------------------ recognition

struct RecognitionSummary {
  std::vector<MeaningFrame> meanings;  // recognized frame sentences, in order
  std::vector<FormTemplate> forms;     // aligned with meanings
  std::size_t sentences = 0;
  std::size_t recognized = 0;
};

// Split each passage on terminator tokens, re-parse every sentence against
// the grammar, and attach spans + recognized template labels in place.
// Unrecognized sentences keep an empty label list (they count toward
// sentences_total but match no construction).
inline RecognitionSummary annotate_with_grammar(Corpus& c, const Grammar& g) {
  std::set<std::string> enders;
  if (!g.default_end.empty()) enders.insert(g.default_end);
  for (const auto& f : g.frames)
    if (!f.end_token.empty()) enders.insert(f.end_token);
  RecognitionSummary sum;
  for (auto& p : c.passages) {
    p.sentence_spans.clear();
    p.sentence_forms.clear();
    std::size_t begin = 0;
    std::vector<std::string> cur;
    const auto close = [&](std::size_t end) {
      if (cur.empty()) return;
      auto rec = recognize_sentence(g, cur);
      p.sentence_spans.emplace_back(begin, end);
      p.sentence_forms.push_back(rec.ok ? rec.form.slots
                                        : std::vector<std::string>{});
      ++sum.sentences;
      if (rec.ok) {
        ++sum.recognized;
        sum.meanings.push_back(std::move(rec.meaning));
        sum.forms.push_back(std::move(rec.form));
      }
      cur.clear();
      begin = end;
    };
    for (std::size_t i = 0; i < p.tokens.size(); ++i) {
      cur.push_back(p.tokens[i]);
      if (enders.count(p.tokens[i])) close(i + 1);
    }
    close(p.tokens.size());
  }
  return sum;
}

// Generation 0 from the grammar carries ground-truth structure already.
inline RecognitionSummary seed_ground_truth(const SeedResult& sr) {
  RecognitionSummary sum;
  for (const auto& ms : sr.meanings)
    sum.meanings.insert(sum.meanings.end(), ms.begin(), ms.end());
  for (const auto& fs : sr.forms)
    sum.forms.insert(sum.forms.end(), fs.begin(), fs.end());
  for (const auto& p : sr.corpus.passages)
    sum.sentences += p.sentence_spans.size();
  sum.recognized = sum.meanings.size();
  return sum;
}

// ----------------------------------------------------------- generation

inline GenerationRecord compute_metrics(const Corpus& corpus, std::size_t gen,
                                        const PipelineConfig& cfg,
                                        const ChainResources& res,
                                        const RecognitionSummary& recog,
                                        const DiversityReport* baseline,
                                        Rng& topsim_rng) {
  GenerationRecord rec;
  rec.generation = gen;
  rec.n_passages = corpus.passages.size();
  rec.unigram = build_frequency_table(corpus);
  rec.n_tokens = rec.unigram.total_tokens;
  std::vector<long long> counts;
  counts.reserve(rec.unigram.items.size());
  for (const auto& [tok, c] : rec.unigram.items) counts.push_back(c);
  rec.unigram_entropy_bits = entropy_bits(counts);
  rec.sentences = recog.sentences;
  rec.recognized = recog.recognized;
  if (cfg.metrics.zipf) rec.zipf = fit_zipf(rec.unigram);
  if (cfg.metrics.diversity && res.has_inventory) {
    try {
      const auto matches = match_constructions(corpus, res.inventory);
      if (baseline != nullptr)
        rec.diversity =
            construction_diversity(matches.counts, res.quartiles, *baseline);
      else
        rec.diversity = construction_diversity(matches, res.quartiles);
    } catch (const std::exception& e) {
      rec.warnings.push_back(std::string("diversity: ") + e.what());
    }
  }
  if (cfg.metrics.regularity && res.has_paradigm) {
    try {
      rec.regularity =
          morph_regularity(corpus, res.paradigm, res.controlled, res.triggers);
    } catch (const std::exception& e) {
      rec.warnings.push_back(std::string("regularity: ") + e.what());
    }
  }
  if (cfg.metrics.topsim) {
    const std::size_t n = recog.meanings.size();
    if (n < 4) {
      rec.warnings.push_back("topsim: fewer than 4 recognized frames");
    } else {
      const std::size_t m = std::min(n, cfg.metrics.topsim_max_items);
      std::vector<MeaningFrame> ms;
      std::vector<FormTemplate> fs;
      ms.reserve(m);
      fs.reserve(m);
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t idx = j * n / m;  // evenly spaced, strictly rising
        ms.push_back(recog.meanings[idx]);
        fs.push_back(recog.forms[idx]);
      }
      rec.topsim =
          topsim(ms, fs, cfg.metrics.topsim_permutations, &topsim_rng);
    }
  }
  if (cfg.metrics.diagnostics) {
    if (recog.meanings.empty())
      rec.warnings.push_back("diagnostics: no recognized frames");
    else
      rec.diagnostics = diagnostics_report(recog.meanings, recog.forms);
  }
  return rec;
}

template <typename SampleOne>
inline Corpus sample_generation(const Corpus& prev, const PipelineConfig& cfg,
                                std::size_t run, std::size_t gen,
                                SampleOne&& sample_one) {
  Corpus out;
  out.origin = CorpusOrigin::generated;
  out.passages.reserve(cfg.passages_per_generation);
  for (std::size_t i = 0; i < cfg.passages_per_generation; ++i) {
    Rng r = Rng::derive(cfg.master_seed, {run, gen, kStreamSample, i});
    const Passage& src = prev.passages[std::size_t(
        r.below(std::uint64_t(prev.passages.size())))];
    const std::size_t take =
        std::min<std::size_t>(std::size_t(cfg.sampler.prompt_tokens),
                              src.tokens.size());
    const std::vector<std::string> prompt(src.tokens.begin(),
                                          src.tokens.begin() +
                                              std::ptrdiff_t(take));
    Passage p = sample_one(prompt, r);
    p.id = passage_id(gen, i);
    p.generation = int(gen);
    p.seed_run = int(run);
    out.passages.push_back(std::move(p));
  }
  return out;
}

struct FilteredGeneration {
  Corpus corpus;
  FilterAudit audit;
  std::vector<QualityScore> scores;  // quality condition only, corpus order
};

inline FilteredGeneration filter_generation(const Corpus& candidates,
                                            const PipelineConfig& cfg,
                                            const NGramLearner& reference,
                                            Rng& rng) {
  FilteredGeneration out;
  out.audit.candidates = candidates.passages.size();
  FilterSpec spec = cfg.filter;
  if (spec.condition == FilterCondition::quality) {
    const PassageScorer scorer =
        surrogate_scorer(reference, cfg.filter_probe, cfg.filter_aggregation);
    std::map<std::string, double> by_id;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sum = 0.0;
    out.scores.reserve(candidates.passages.size());
    for (const auto& p : candidates.passages) {
      QualityScore q = scorer(p);
      by_id[q.passage_id] = q.score;
      lo = std::min(lo, q.score);
      hi = std::max(hi, q.score);
      sum += q.score;
      out.scores.push_back(std::move(q));
    }
    out.audit.scored = true;
    out.audit.score_min = lo;
    out.audit.score_max = hi;
    out.audit.score_mean = sum / double(candidates.passages.size());
    spec.scorer = [&by_id](const Passage& p) {
      QualityScore q;
      q.passage_id = p.id;
      q.score = by_id.at(p.id);
      return q;
    };
    out.corpus = apply_filter(candidates, spec, rng);
    double kept_lo = std::numeric_limits<double>::infinity();
    for (const auto& p : out.corpus.passages)
      kept_lo = std::min(kept_lo, by_id.at(p.id));
    out.audit.retained_score_min = kept_lo;
  } else {
    out.corpus = apply_filter(candidates, spec, rng);
  }
  out.audit.retained = out.corpus.passages.size();
  out.audit.discarded = out.audit.candidates - out.audit.retained;
  return out;
}

inline csv::Table metrics_table(const std::vector<GenerationRecord>& records,
                                bool complete, const std::string& error) {
  csv::Table t;
  t.comments.push_back(std::string("# status = ") +
                       (complete ? "complete" : "incomplete"));
  if (!complete) {
    std::string msg = error;
    for (auto& ch : msg)
      if (ch == '\n' || ch == '\r') ch = ' ';
    t.comments.push_back("# error = " + msg);
  }
  t.header = metric_columns();
  for (const auto& r : records) t.rows.push_back(metric_row(r));
  return t;
}

// One full chain with preloaded resources. Mid-run learner/endpoint/metric
// failures return a partial trajectory marked incomplete (persisted when a
// run directory is configured); config and resource errors throw before any
// generation work.
inline Trajectory run_chain_impl(const PipelineConfig& cfg, std::size_t run,
                                 const ChainResources& res) {
  Trajectory traj;
  traj.seed_run = run;
  traj.condition = condition_name(cfg.filter.condition);
  std::string run_dir;
  if (!cfg.run_dir.empty()) {
    run_dir = cfg.run_dir + "/run-" + std::to_string(run);
    std::filesystem::create_directories(run_dir);
    write_text_atomic(cfg.run_dir + "/config.cfg",
                      cfg::serialize_flat_config(pipeline_config_to_flat(cfg)));
  }
  const bool needs_recognition =
      res.has_grammar &&
      (cfg.metrics.diversity || cfg.metrics.topsim || cfg.metrics.diagnostics);
  const NGramLearner base =
      make_ngram_template(cfg.learner.order, cfg.learner.add_k);
  NGramLearner learner;    // producer for the next generation (ngram kind)
  NGramLearner reference;  // quality evaluator, anchored to the seed corpus
  std::optional<EndpointClient> client;
  if (cfg.learner.kind == LearnerKind::endpoint)
    client.emplace(cfg.learner.endpoint);
  std::optional<DiversityReport> baseline;  // this chain's generation 0
  const auto persist_corpus = [&](const Corpus& c, std::size_t gen,
                                  GenerationRecord& rec) {
    if (run_dir.empty()) return;
    const std::string path = run_dir + "/" + gen_stem(gen) + ".passages";
    export_corpus_atomic(path, c, CorpusFormat::passage_lines);
    rec.corpus_path = path;
  };
  std::size_t gen = 0;
  try {
    Corpus cur;
    RecognitionSummary recog;
    if (!cfg.seed.corpus_path.empty()) {
      cur = ingest(cfg.seed.corpus_path, CorpusFormat::passage_lines);
      validate_corpus(cur);
      if (needs_recognition) recog = annotate_with_grammar(cur, res.grammar);
    } else {
      Rng seed_rng = Rng::derive(cfg.master_seed, {run, 0, kStreamSeedCorpus});
      SeedResult sr = generate_seed(res.grammar, cfg.seed.passages, seed_rng,
                                    cfg.seed.min_tokens, cfg.seed.max_tokens);
      for (auto& p : sr.corpus.passages) p.seed_run = int(run);
      recog = seed_ground_truth(sr);
      cur = std::move(sr.corpus);
    }
    if (cfg.learner.kind == LearnerKind::ngram) learner = fit_ngram(base, cur);
    if (cfg.filter.condition == FilterCondition::quality)
      reference = fit_ngram(base, cur);
    {
      Rng topsim_rng = Rng::derive(cfg.master_seed, {run, 0, kStreamTopsim});
      GenerationRecord r0 =
          compute_metrics(cur, 0, cfg, res, recog, nullptr, topsim_rng);
      if (r0.diversity && r0.diversity->overall_bits > 0.0) {
        baseline = r0.diversity;
        r0.diversity->normalized_pct = 100.0;
      }
      r0.filter.candidates = r0.filter.retained = cur.passages.size();
      persist_corpus(cur, 0, r0);
      traj.records.push_back(std::move(r0));
    }
    for (gen = 1; gen <= cfg.generations; ++gen) {
      Corpus cand;
      if (cfg.learner.kind == LearnerKind::ngram) {
        SamplerCache cache;
        cand = sample_generation(
            cur, cfg, run, gen, [&](const std::vector<std::string>& prompt,
                                    Rng& r) {
              return sample_continuation(learner, prompt, cfg.sampler, r,
                                         &cache);
            });
      } else {
        cand = sample_generation(
            cur, cfg, run, gen, [&](const std::vector<std::string>& prompt,
                                    Rng& r) {
              return sample_continuation(*client, prompt, cfg.sampler, r);
            });
      }
      Rng filter_rng = Rng::derive(cfg.master_seed, {run, gen, kStreamFilter});
      FilteredGeneration fg =
          filter_generation(cand, cfg, reference, filter_rng);
      cur = std::move(fg.corpus);
      if (!run_dir.empty() && fg.audit.scored) {
        const std::string spath =
            run_dir + "/" + gen_stem(gen) + ".scores.csv";
        write_scores_csv(spath + ".tmp", fg.scores);
        std::filesystem::rename(spath + ".tmp", spath);
      }
      RecognitionSummary rg;
      if (needs_recognition) rg = annotate_with_grammar(cur, res.grammar);
      if (cfg.learner.kind == LearnerKind::ngram)
        learner = fit_ngram(base, cur);  // fresh refit from the base template
      Rng topsim_rng = Rng::derive(cfg.master_seed, {run, gen, kStreamTopsim});
      GenerationRecord r = compute_metrics(
          cur, gen, cfg, res, rg, baseline ? &*baseline : nullptr, topsim_rng);
      r.filter = fg.audit;
      persist_corpus(cur, gen, r);
      traj.records.push_back(std::move(r));
    }
  } catch (const std::exception& e) {
    traj.complete = false;
    traj.error = "generation " + std::to_string(gen) + ": " + e.what();
  }
  if (!run_dir.empty())
    write_table_atomic(run_dir + "/metrics.csv",
                       metrics_table(traj.records, traj.complete, traj.error));
  return traj;
}

}  // namespace detail

// ------------------------------------------------------------ operations ---

inline Trajectory run_chain(const PipelineConfig& cfg, std::size_t seed_run) {
  validate_pipeline_config(cfg);
  const detail::ChainResources res = detail::load_chain_resources(cfg);
  return detail::run_chain_impl(cfg, seed_run, res);
}

// ------------------------------------------------------------- experiment ---

struct ConditionSpec {
  std::string name;  // directory- and report-safe label
  FilterSpec filter;
};

struct ComparisonRow {
  std::string metric;
  std::string condition_a, condition_b;
  std::size_t n_a = 0, n_b = 0;
  double mean_a = 0.0, mean_b = 0.0;
  std::optional<double> hedges_g;  // absent when pooled variance is zero
  double p_value = 1.0;            // permutation test on the mean difference
  std::optional<double> bf10;      // JZS Bayes factor (absent when undefined)
  bool significant = false;        // BH-FDR at q = 0.05 over the family
};

struct ExperimentResult {
  std::vector<std::string> condition_names;
  std::map<std::string, std::vector<Trajectory>> trajectories;
  std::vector<ComparisonRow> comparisons;  // final-generation metrics
  double fdr_threshold = 0.0;
  bool flagged = false;  // some chain ended incomplete
  std::vector<std::string> warnings;
};

namespace detail {

inline void validate_condition_name(const std::string& name) {
  if (name.empty())
    throw std::invalid_argument("run_experiment: empty condition name");
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-';
    if (!ok)
      throw std::invalid_argument(
          "run_experiment: condition name '" + name +
          "' must use only [a-z0-9_-]");
  }
}

inline csv::Table trajectories_table(const ExperimentResult& res) {
  csv::Table t;
  t.header = {"condition", "seed_run", "complete"};
  const auto cols = metric_columns();
  t.header.insert(t.header.end(), cols.begin(), cols.end());
  for (const auto& name : res.condition_names)
    for (const auto& traj : res.trajectories.at(name))
      for (const auto& rec : traj.records) {
        std::vector<std::string> row = {name, std::to_string(traj.seed_run),
                                        traj.complete ? "true" : "false"};
        const auto tail = metric_row(rec);
        row.insert(row.end(), tail.begin(), tail.end());
        t.rows.push_back(std::move(row));
      }
  return t;
}

inline csv::Table comparisons_table(const ExperimentResult& res) {
  csv::Table t;
  t.comments.push_back("# fdr_threshold = " + format_double(res.fdr_threshold));
  t.header = {"metric", "condition_a", "condition_b", "n_a",
              "n_b",    "mean_a",      "mean_b",      "hedges_g",
              "p_value", "bf10",       "significant"};
  for (const auto& c : res.comparisons)
    t.rows.push_back({c.metric, c.condition_a, c.condition_b,
                      std::to_string(c.n_a), std::to_string(c.n_b),
                      format_double(c.mean_a), format_double(c.mean_b),
                      c.hedges_g ? format_double(*c.hedges_g) : "",
                      format_double(c.p_value),
                      c.bf10 ? format_double(*c.bf10) : "",
                      c.significant ? "true" : "false"});
  return t;
}

}  // namespace detail

// Runs every condition over the same k seed runs (shared substreams, so
// conditions differ only through their filters), then compares the selected
// scalar metrics at the final generation across condition pairs with
// permutation p-values, Hedges' g, JZS Bayes factors, and BH-FDR control
// over the whole comparison family.
inline ExperimentResult run_experiment(
    const PipelineConfig& base, const std::vector<ConditionSpec>& conditions,
    std::size_t seeds) {
  if (conditions.empty())
    throw std::invalid_argument("run_experiment: no conditions");
  if (seeds < 2)
    throw std::invalid_argument(
        "run_experiment: need >= 2 seed runs for comparisons");
  {
    std::set<std::string> names;
    for (const auto& c : conditions) {
      detail::validate_condition_name(c.name);
      if (!names.insert(c.name).second)
        throw std::invalid_argument(
            "run_experiment: duplicate condition name '" + c.name + "'");
    }
  }
  std::vector<PipelineConfig> configs;
  configs.reserve(conditions.size());
  for (const auto& cond : conditions) {
    PipelineConfig cc = base;
    cc.filter = cond.filter;
    cc.seed_runs = seeds;
    if (!base.run_dir.empty()) cc.run_dir = base.run_dir + "/" + cond.name;
    validate_pipeline_config(cc);
    configs.push_back(std::move(cc));
  }
  const detail::ChainResources res = detail::load_chain_resources(base);

  ExperimentResult out;
  for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
    auto& set = out.trajectories[conditions[ci].name];
    std::size_t complete = 0;
    for (std::size_t r = 0; r < seeds; ++r) {
      set.push_back(detail::run_chain_impl(configs[ci], r, res));
      set.back().condition = conditions[ci].name;
      if (set.back().complete) {
        ++complete;
      } else {
        out.flagged = true;
        out.warnings.push_back("chain " + conditions[ci].name + "/run-" +
                               std::to_string(r) +
                               " incomplete: " + set.back().error);
      }
    }
    if (complete == 0)
      throw std::runtime_error("run_experiment: condition '" +
                               conditions[ci].name +
                               "' produced no complete trajectory");
    out.condition_names.push_back(conditions[ci].name);
  }

  // comparison family: final-generation scalar metrics x condition pairs
  std::vector<std::string> family;
  for (const auto& name : scalar_metric_names()) {
    if (name == "unigram_entropy") family.push_back(name);
    if (name == "zipf_alpha" && base.metrics.zipf) family.push_back(name);
    if ((name == "diversity_bits" || name == "diversity_pct") &&
        base.metrics.diversity)
      family.push_back(name);
    if (name == "regularity_rho" && base.metrics.regularity)
      family.push_back(name);
    if (name == "topsim_sigma" && base.metrics.topsim) family.push_back(name);
  }
  const auto final_values = [&](const std::string& cond,
                                const std::string& metric) {
    std::vector<double> vals;
    for (const auto& traj : out.trajectories.at(cond)) {
      if (!traj.complete) continue;
      const auto v = scalar_metric(traj.records.back(), metric);
      if (v) vals.push_back(*v);
    }
    return vals;
  };
  std::size_t pair_idx = 0;
  for (std::size_t i = 0; i < out.condition_names.size(); ++i)
    for (std::size_t j = i + 1; j < out.condition_names.size(); ++j) {
      for (std::size_t mi = 0; mi < family.size(); ++mi) {
        const auto& metric = family[mi];
        const auto a = final_values(out.condition_names[i], metric);
        const auto b = final_values(out.condition_names[j], metric);
        if (a.size() < 2 || b.size() < 2) {
          out.warnings.push_back("comparison skipped (" + metric + ", " +
                                 out.condition_names[i] + " vs " +
                                 out.condition_names[j] +
                                 "): fewer than 2 values per side");
          continue;
        }
        ComparisonRow row;
        row.metric = metric;
        row.condition_a = out.condition_names[i];
        row.condition_b = out.condition_names[j];
        row.n_a = a.size();
        row.n_b = b.size();
        for (double v : a) row.mean_a += v;
        row.mean_a /= double(a.size());
        for (double v : b) row.mean_b += v;
        row.mean_b /= double(b.size());
        Rng prng = Rng::derive(base.master_seed,
                               {kStreamCompare, pair_idx, mi});
        row.p_value = mean_diff_permutation_p(a, b, prng, 20000);
        try {
          row.hedges_g = hedges_g(a, b).hedges_g;
        } catch (const std::exception& e) {
          out.warnings.push_back("hedges_g (" + metric + ", " +
                                 row.condition_a + " vs " + row.condition_b +
                                 "): " + e.what());
        }
        try {
          row.bf10 = jzs_bf10(a, b);
        } catch (const std::exception& e) {
          out.warnings.push_back("bf10 (" + metric + ", " + row.condition_a +
                                 " vs " + row.condition_b + "): " + e.what());
        }
        out.comparisons.push_back(std::move(row));
      }
      ++pair_idx;
    }
  if (!out.comparisons.empty()) {
    std::vector<double> ps;
    ps.reserve(out.comparisons.size());
    for (const auto& c : out.comparisons) ps.push_back(c.p_value);
    const FdrResult fdr = bh_fdr(ps, 0.05);
    out.fdr_threshold = fdr.threshold;
    for (std::size_t idx : fdr.rejected)
      out.comparisons[idx].significant = true;
  }

  if (!base.run_dir.empty()) {
    std::filesystem::create_directories(base.run_dir);
    detail::write_text_atomic(
        base.run_dir + "/config.cfg",
        cfg::serialize_flat_config(pipeline_config_to_flat(base)));
    detail::write_table_atomic(base.run_dir + "/trajectories.csv",
                               detail::trajectories_table(out));
    detail::write_table_atomic(base.run_dir + "/comparisons.csv",
                               detail::comparisons_table(out));
  }
  return out;
}

// ------------------------------------------------------------ convergence ---

struct ConvergenceReport {
  std::string metric;
  std::vector<double> mean_delta;  // |m_n - m_{n-1}| averaged over runs, n>=1
  DecayFit decay;                  // exponential fit over mean_delta
  std::vector<double> cross_seed_jsd;  // per generation, mean pairwise JSD
  std::size_t n_trajectories = 0;
  std::vector<std::string> warnings;
};

// Same-condition trajectory set -> per-generation rate-of-change summary and
// cross-seed distributional convergence. The decay fit indexes mean_delta
// from 0 (the generation 0 -> 1 step).
inline ConvergenceReport convergence_report(
    const std::vector<Trajectory>& trajectories, const std::string& metric) {
  if (trajectories.size() < 2)
    throw std::invalid_argument(
        "convergence_report: need >= 2 trajectories for cross-seed JSD");
  const std::size_t len = trajectories.front().records.size();
  for (const auto& t : trajectories) {
    if (!t.complete)
      throw std::invalid_argument(
          "convergence_report: trajectory run-" + std::to_string(t.seed_run) +
          " is incomplete");
    if (t.records.size() != len)
      throw std::invalid_argument(
          "convergence_report: trajectories have unequal lengths");
  }
  if (len < 5)
    throw std::invalid_argument(
        "convergence_report: need >= 4 generations for the decay fit");
  std::vector<std::vector<double>> values(trajectories.size());
  for (std::size_t r = 0; r < trajectories.size(); ++r) {
    values[r].reserve(len);
    for (const auto& rec : trajectories[r].records) {
      const auto v = scalar_metric(rec, metric);
      if (!v)
        throw std::invalid_argument(
            "convergence_report: metric '" + metric +
            "' missing at generation " + std::to_string(rec.generation) +
            " of run-" + std::to_string(trajectories[r].seed_run));
      values[r].push_back(*v);
    }
  }
  ConvergenceReport rep;
  rep.metric = metric;
  rep.n_trajectories = trajectories.size();
  rep.mean_delta.reserve(len - 1);
  for (std::size_t n = 1; n < len; ++n) {
    double acc = 0.0;
    for (const auto& v : values) acc += std::abs(v[n] - v[n - 1]);
    rep.mean_delta.push_back(acc / double(values.size()));
  }
  rep.decay = fit_decay(rep.mean_delta);
  rep.warnings = rep.decay.warnings;
  rep.cross_seed_jsd.reserve(len);
  for (std::size_t n = 0; n < len; ++n) {
    double acc = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < trajectories.size(); ++i)
      for (std::size_t j = i + 1; j < trajectories.size(); ++j) {
        acc += jensen_shannon_divergence(trajectories[i].records[n].unigram,
                                         trajectories[j].records[n].unigram);
        ++pairs;
      }
    rep.cross_seed_jsd.push_back(acc / double(pairs));
  }
  return rep;
}

}  // namespace itlab
