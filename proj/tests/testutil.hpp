#pragma once
// Shared helpers for the test suite: scratch directories and deep equality
// on corpus structures.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "itlab/corpus.hpp"

namespace testutil {

// Fresh scratch directory, unique per call, cleaned up by the destructor.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    auto base = std::filesystem::temp_directory_path();
    static std::mt19937_64 eng{std::random_device{}()};
    for (int attempt = 0; attempt < 64; ++attempt) {
      auto candidate = base / ("itlab_test_" + std::to_string(eng()));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path = candidate;
        return;
      }
    }
    throw std::runtime_error("TempDir: could not create scratch directory");
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

inline std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline void spit(const std::string& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  os << content;
}

inline bool annotations_equal(const itlab::TokenAnnotation& a,
                              const itlab::TokenAnnotation& b) {
  return a.head == b.head && a.deprel == b.deprel && a.upos == b.upos &&
         a.lemma == b.lemma;
}

inline bool passages_equal(const itlab::Passage& a, const itlab::Passage& b) {
  if (a.id != b.id || a.generation != b.generation || a.seed_run != b.seed_run)
    return false;
  if (a.tokens != b.tokens) return false;
  if (a.annotations.size() != b.annotations.size()) return false;
  for (std::size_t i = 0; i < a.annotations.size(); ++i)
    if (!annotations_equal(a.annotations[i], b.annotations[i])) return false;
  return true;
}

inline bool corpora_equal(const itlab::Corpus& a, const itlab::Corpus& b) {
  if (a.passages.size() != b.passages.size()) return false;
  for (std::size_t i = 0; i < a.passages.size(); ++i)
    if (!passages_equal(a.passages[i], b.passages[i])) return false;
  return true;
}

}  // namespace testutil
