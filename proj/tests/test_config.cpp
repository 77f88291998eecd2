#include <catch2/catch_amalgamated.hpp>

#include <stdexcept>

#include "itlab/config.hpp"

using namespace itlab;

TEST_CASE("parse_flat_config reads keys, comments, and blanks", "[config]") {
  const std::string text =
      "# run shape\n"
      "chain.generations = 10\n"
      "\n"
      "filter.condition = quality   # trailing comment\n"
      "seed.corpus =\n"
      "   sampler.temperature=0.8\n";
  const cfg::FlatConfig f = cfg::parse_flat_config(text);
  REQUIRE(f.entries.size() == 4);
  REQUIRE(*f.find("chain.generations") == "10");
  REQUIRE(*f.find("filter.condition") == "quality");
  REQUIRE(*f.find("seed.corpus") == "");
  REQUIRE(*f.find("sampler.temperature") == "0.8");
  REQUIRE(f.find("missing") == nullptr);
}

TEST_CASE("parse_flat_config preserves first-seen key order", "[config]") {
  const cfg::FlatConfig f = cfg::parse_flat_config("b = 1\na = 2\nc = 3\n");
  REQUIRE(f.entries[0].first == "b");
  REQUIRE(f.entries[1].first == "a");
  REQUIRE(f.entries[2].first == "c");
}

TEST_CASE("parse_flat_config rejects malformed lines with line numbers",
          "[config]") {
  using Catch::Matchers::ContainsSubstring;
  REQUIRE_THROWS_MATCHES(cfg::parse_flat_config("a = 1\nno equals sign\n"),
                         std::invalid_argument, ContainsSubstring("line 2"));
  REQUIRE_THROWS_MATCHES(cfg::parse_flat_config("a = 1\na = 2\n"),
                         std::invalid_argument, ContainsSubstring("line 2"));
  REQUIRE_THROWS_MATCHES(cfg::parse_flat_config("a = 1\nBad.Key = 2\n"),
                         std::invalid_argument, ContainsSubstring("line 2"));
}

TEST_CASE("validate_key enforces dotted lowercase identifiers", "[config]") {
  REQUIRE_NOTHROW(cfg::validate_key("a.b_c.d0"));
  REQUIRE_THROWS_AS(cfg::validate_key(""), std::invalid_argument);
  REQUIRE_THROWS_AS(cfg::validate_key(".a"), std::invalid_argument);
  REQUIRE_THROWS_AS(cfg::validate_key("a."), std::invalid_argument);
  REQUIRE_THROWS_AS(cfg::validate_key("a..b"), std::invalid_argument);
  REQUIRE_THROWS_AS(cfg::validate_key("a b"), std::invalid_argument);
  REQUIRE_THROWS_AS(cfg::validate_key("A.b"), std::invalid_argument);
}

TEST_CASE("serialize then parse round-trips entries byte-stably", "[config]") {
  cfg::FlatConfig f;
  f.set("alpha.one", "7");
  f.set("alpha.two", "hello world");
  f.set("beta.empty", "");
  const std::string text = cfg::serialize_flat_config(f);
  REQUIRE(text ==
          "alpha.one = 7\n"
          "alpha.two = hello world\n"
          "beta.empty =\n");
  const cfg::FlatConfig g = cfg::parse_flat_config(text);
  REQUIRE(g.entries == f.entries);
  REQUIRE(cfg::serialize_flat_config(g) == text);
}

TEST_CASE("set replaces in place and apply_override parses key=value",
          "[config]") {
  cfg::FlatConfig f = cfg::parse_flat_config("a.x = 1\na.y = 2\n");
  f.set("a.x", "10");
  REQUIRE(f.entries.size() == 2);
  REQUIRE(f.entries[0].second == "10");
  cfg::apply_override(f, "a.z=3");
  REQUIRE(*f.find("a.z") == "3");
  cfg::apply_override(f, "a.y=two parts");
  REQUIRE(*f.find("a.y") == "two parts");
  REQUIRE_THROWS_AS(cfg::apply_override(f, "no-equals"),
                    std::invalid_argument);
}

TEST_CASE("reject_unknown_keys names the offending key", "[config]") {
  using Catch::Matchers::ContainsSubstring;
  const cfg::FlatConfig f = cfg::parse_flat_config("a.x = 1\nb.y = 2\n");
  REQUIRE_NOTHROW(cfg::reject_unknown_keys(f, {"a.x", "b.y", "c.z"}));
  REQUIRE_THROWS_MATCHES(cfg::reject_unknown_keys(f, {"a.x"}),
                         std::invalid_argument, ContainsSubstring("b.y"));
}

TEST_CASE("typed getters parse strictly and fall back when absent",
          "[config]") {
  const cfg::FlatConfig f = cfg::parse_flat_config(
      "s = text\nb1 = true\nb2 = false\nn = 42\nd = 2.5\nbad_b = yes\n"
      "bad_n = 12x\nneg = -3\n");
  REQUIRE(cfg::get_string(f, "s", "zz") == "text");
  REQUIRE(cfg::get_string(f, "absent", "zz") == "zz");
  REQUIRE(cfg::require_string(f, "s") == "text");
  REQUIRE_THROWS_AS(cfg::require_string(f, "absent"), std::invalid_argument);
  REQUIRE(cfg::get_bool(f, "b1", false));
  REQUIRE_FALSE(cfg::get_bool(f, "b2", true));
  REQUIRE(cfg::get_bool(f, "absent", true));
  REQUIRE_THROWS_AS(cfg::get_bool(f, "bad_b", false), std::invalid_argument);
  REQUIRE(cfg::get_u64(f, "n", 0) == 42);
  REQUIRE(cfg::get_u64(f, "absent", 7) == 7);
  REQUIRE_THROWS_AS(cfg::get_u64(f, "bad_n", 0), std::invalid_argument);
  REQUIRE_THROWS_AS(cfg::get_u64(f, "neg", 0), std::invalid_argument);
  REQUIRE(cfg::get_double(f, "d", 0.0) == 2.5);
  REQUIRE(cfg::get_double(f, "n", 0.0) == 42.0);
  REQUIRE_THROWS_AS(cfg::get_double(f, "bad_n", 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(cfg::get_double(f, "s", 0.0), std::invalid_argument);
}
