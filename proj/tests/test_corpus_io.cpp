#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "itlab/corpus_io.hpp"
#include "testutil.hpp"

using namespace itlab;
using testutil::TempDir;

namespace {

Corpus small_corpus() {
  Corpus c;
  for (int i = 0; i < 3; ++i) {
    Passage p;
    p.id = "seed:" + std::to_string(i);
    p.generation = 0;
    p.seed_run = 2;
    p.tokens = {"alice", "carried", "the", "book", "."};
    p.tokens.push_back("trailer" + std::to_string(i));
    c.passages.push_back(std::move(p));
  }
  return c;
}

Corpus annotated_corpus() {
  Corpus c;
  Passage p;
  p.id = "doc:0";
  p.generation = 1;
  p.seed_run = 0;
  p.tokens = {"alice", "sees", "bob", "bob", "sleeps"};
  p.sentence_spans = {{0, 3}, {3, 5}};
  p.annotations.resize(5);
  // Sentence 1: alice <-nsubj- sees -> bob (dobj); head of "sees" = root.
  p.annotations[0] = {2, "nsubj", "PROPN", "alice"};
  p.annotations[1] = {0, "root", "VERB", "see"};
  p.annotations[2] = {2, "dobj", "PROPN", "bob"};
  // Sentence 2: bob <-nsubj- sleeps.
  p.annotations[3] = {5, "nsubj", "PROPN", "bob"};
  p.annotations[4] = {0, "root", "VERB", "sleep"};
  c.passages.push_back(std::move(p));
  return c;
}

}  // namespace

TEST_CASE("passage-lines round trip preserves all fields", "[corpusio]") {
  TempDir td;
  const auto path = td.file("c.jsonl");
  const Corpus c = small_corpus();
  export_corpus(path, c, CorpusFormat::passage_lines);
  const Corpus back = ingest(path, CorpusFormat::passage_lines);
  REQUIRE(back.size() == 3);
  REQUIRE(testutil::corpora_equal(c, back));
}

TEST_CASE("passage-lines export is canonical and byte-stable", "[corpusio]") {
  TempDir td;
  const auto p1 = td.file("a.jsonl");
  const auto p2 = td.file("b.jsonl");
  export_corpus(p1, small_corpus(), CorpusFormat::passage_lines);
  const Corpus once = ingest(p1, CorpusFormat::passage_lines);
  export_corpus(p2, once, CorpusFormat::passage_lines);
  REQUIRE(testutil::slurp(p1) == testutil::slurp(p2));
}

TEST_CASE("passage-lines reports malformed records with line numbers",
          "[corpusio]") {
  TempDir td;
  const auto path = td.file("bad.jsonl");
  testutil::spit(path,
                 R"({"id":"a","generation":0,"seed_run":0,"text":"x y"})"
                 "\nnot json at all\n");
  try {
    ingest(path, CorpusFormat::passage_lines);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    REQUIRE(e.line == 2);
  }

  const auto missing = td.file("missing.jsonl");
  testutil::spit(missing, R"({"id":"a","generation":0,"text":"x"})" "\n");
  REQUIRE_THROWS_AS(ingest(missing, CorpusFormat::passage_lines), IoError);
}

TEST_CASE("plaintext ingestion splits on blank lines", "[corpusio]") {
  TempDir td;
  const auto path = td.file("plain.txt");
  std::string content;
  for (int i = 0; i < 10; ++i)
    content += "passage number " + std::to_string(i) + " text\n\n";
  testutil::spit(path, content);
  const Corpus c = ingest(path, CorpusFormat::plaintext);
  REQUIRE(c.size() == 10);
  REQUIRE(c.passages[0].tokens ==
          std::vector<std::string>{"passage", "number", "0", "text"});
  REQUIRE(c.passages[0].id == "plain:0");
}

TEST_CASE("plaintext multi-line passages join with spaces", "[corpusio]") {
  TempDir td;
  const auto path = td.file("p.txt");
  testutil::spit(path, "line one\nline two\n\nsecond passage\n");
  const Corpus c = ingest(path, CorpusFormat::plaintext);
  REQUIRE(c.size() == 2);
  REQUIRE(c.passages[0].tokens ==
          std::vector<std::string>{"line", "one", "line", "two"});
}

TEST_CASE("token-annotated round trip preserves structure", "[corpusio]") {
  TempDir td;
  const auto path = td.file("c.conllu");
  const Corpus c = annotated_corpus();
  export_corpus(path, c, CorpusFormat::token_annotated);
  const Corpus back = ingest(path, CorpusFormat::token_annotated);
  REQUIRE(testutil::corpora_equal(c, back));
  REQUIRE(back.passages[0].sentence_spans == c.passages[0].sentence_spans);

  // Canonical byte-stability.
  const auto path2 = td.file("c2.conllu");
  export_corpus(path2, back, CorpusFormat::token_annotated);
  REQUIRE(testutil::slurp(path) == testutil::slurp(path2));
}

TEST_CASE("token-annotated validates head range and column count",
          "[corpusio]") {
  TempDir td;
  const auto bad_head = td.file("bh.conllu");
  testutil::spit(bad_head,
                 "# passage_id = x\n"
                 "1\tword\t_\t_\t_\t_\t5\tdep\t_\t_\n\n");
  try {
    ingest(bad_head, CorpusFormat::token_annotated);
    FAIL("expected IoError");
  } catch (const IoError& e) {
    REQUIRE(e.line >= 2);
  }

  const auto bad_cols = td.file("bc.conllu");
  testutil::spit(bad_cols,
                 "# passage_id = x\n"
                 "1\tword\t_\n\n");
  REQUIRE_THROWS_AS(ingest(bad_cols, CorpusFormat::token_annotated), IoError);

  const auto bad_seq = td.file("bs.conllu");
  testutil::spit(bad_seq,
                 "# passage_id = x\n"
                 "2\tword\t_\t_\t_\t_\t0\troot\t_\t_\n\n");
  REQUIRE_THROWS_AS(ingest(bad_seq, CorpusFormat::token_annotated), IoError);
}

TEST_CASE("ingest-export identity on corpus structures", "[corpusio]") {
  TempDir td;
  for (auto format :
       {CorpusFormat::passage_lines, CorpusFormat::token_annotated}) {
    const Corpus c = (format == CorpusFormat::token_annotated)
                         ? annotated_corpus()
                         : small_corpus();
    const auto p1 = td.file("i1");
    export_corpus(p1, c, format);
    const Corpus r1 = ingest(p1, format);
    const auto p2 = td.file("i2");
    export_corpus(p2, r1, format);
    const Corpus r2 = ingest(p2, format);
    REQUIRE(testutil::corpora_equal(r1, r2));
    REQUIRE(testutil::slurp(p1) == testutil::slurp(p2));
  }
}

TEST_CASE("atomic export leaves no temp file behind", "[corpusio]") {
  TempDir td;
  const auto path = td.file("atomic.jsonl");
  export_corpus_atomic(path, small_corpus(), CorpusFormat::passage_lines);
  REQUIRE(std::filesystem::exists(path));
  REQUIRE_FALSE(std::filesystem::exists(path + ".tmp"));
  const Corpus back = ingest(path, CorpusFormat::passage_lines);
  REQUIRE(back.size() == 3);
}
