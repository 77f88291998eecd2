#pragma once
// Ground-truth semantic frames and dependency-style form templates.
// Generators emit these alongside text; ingestion derives them from
// annotations. Distances over them feed the compositionality metrics.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace itlab {

struct MeaningFrame {
  std::string predicate;        // lexical identifier, non-empty
  std::string predicate_class;  // lexical class (falls back to predicate)
  // role label (ARG0, ARG1, ...) -> filler lexical identifier
  std::map<std::string, std::string> roles;
  // role label -> filler class; missing entries fall back to the identifier
  std::map<std::string, std::string> role_classes;

  std::string role_class(const std::string& role) const {
    const auto it = role_classes.find(role);
    if (it != role_classes.end() && !it->second.empty()) return it->second;
    const auto rit = roles.find(role);
    return rit == roles.end() ? std::string() : rit->second;
  }
  std::string pred_class() const {
    return predicate_class.empty() ? predicate : predicate_class;
  }
};

struct FormTemplate {
  std::vector<std::string> slots;  // ordered category labels, non-empty

  bool operator==(const FormTemplate& o) const { return slots == o.slots; }
  bool operator<(const FormTemplate& o) const { return slots < o.slots; }
};

inline void validate_frame(const MeaningFrame& f) {
  if (f.predicate.empty())
    throw std::invalid_argument("MeaningFrame: empty predicate");
}

inline void validate_template(const FormTemplate& t) {
  if (t.slots.empty())
    throw std::invalid_argument("FormTemplate: empty slot sequence");
}

// 1 - Jaccard over {(role, filler-class)} united with {(PRED, pred-class)}
inline double meaning_distance(const MeaningFrame& a, const MeaningFrame& b) {
  validate_frame(a);
  validate_frame(b);
  std::set<std::pair<std::string, std::string>> sa, sb;
  sa.emplace("PRED", a.pred_class());
  sb.emplace("PRED", b.pred_class());
  for (const auto& [role, filler] : a.roles) sa.emplace(role, a.role_class(role));
  for (const auto& [role, filler] : b.roles) sb.emplace(role, b.role_class(role));
  std::size_t inter = 0;
  for (const auto& e : sa) inter += sb.count(e);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return 1.0 - double(inter) / double(uni);
}

// Levenshtein distance over slot-label sequences, unit costs
inline double form_distance(const FormTemplate& a, const FormTemplate& b) {
  validate_template(a);
  validate_template(b);
  const auto& x = a.slots;
  const auto& y = b.slots;
  std::vector<std::size_t> prev(y.size() + 1), cur(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return double(prev[y.size()]);
}

}  // namespace itlab
