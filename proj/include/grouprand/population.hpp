#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "grouprand/error.hpp"

namespace grouprand {

/// Categorical attribute or treatment code.
using Code = int;

inline const std::vector<Code>& binary_alphabet() {
  static const std::vector<Code> alphabet{0, 1};
  return alphabet;
}

/// Fixed experimental population: one attribute code per unit plus the
/// declared attribute alphabet. Immutable after construction.
class Population {
 public:
  Population(std::vector<Code> attributes, std::vector<Code> alphabet)
      : attributes_(std::move(attributes)), alphabet_(std::move(alphabet)) {
    detail::require(!attributes_.empty(), "population is empty");
    detail::require(!alphabet_.empty(), "attribute alphabet is empty");
    std::sort(alphabet_.begin(), alphabet_.end());
    detail::require(std::adjacent_find(alphabet_.begin(), alphabet_.end()) == alphabet_.end(),
                    "attribute alphabet has duplicate codes");
    for (Code a : alphabet_) strata_[a];
    for (std::size_t i = 0; i < attributes_.size(); ++i) {
      auto it = strata_.find(attributes_[i]);
      if (it == strata_.end()) {
        throw InvalidInput("unit " + std::to_string(i) + " has attribute " +
                           std::to_string(attributes_[i]) + " outside the declared alphabet");
      }
      it->second.push_back(i);
    }
  }

  std::size_t size() const { return attributes_.size(); }
  Code attribute(std::size_t unit) const { return attributes_.at(unit); }
  std::span<const Code> attributes() const { return attributes_; }
  const std::vector<Code>& alphabet() const { return alphabet_; }

  /// Units with attribute `a`, in increasing index order. Empty for a
  /// declared but unused level.
  std::span<const std::size_t> stratum(Code a) const {
    auto it = strata_.find(a);
    detail::require(it != strata_.end(), "attribute " + std::to_string(a) + " is not in the alphabet");
    return it->second;
  }

  std::size_t stratum_size(Code a) const { return stratum(a).size(); }

  const std::map<Code, std::vector<std::size_t>>& strata() const { return strata_; }

 private:
  std::vector<Code> attributes_;
  std::vector<Code> alphabet_;
  std::map<Code, std::vector<std::size_t>> strata_;
};

inline Population build_population(std::vector<Code> attributes,
                                   std::vector<Code> alphabet = binary_alphabet()) {
  return Population(std::move(attributes), std::move(alphabet));
}

/// Group labels L (1..K) and treatment codes W for every unit.
struct Assignment {
  std::vector<int> groups;
  std::vector<Code> treatments;
  std::size_t group_size = 0;
  std::size_t n_groups = 0;
  std::vector<Code> treatment_alphabet = binary_alphabet();

  std::size_t size() const { return groups.size(); }

  friend bool operator==(const Assignment& lhs, const Assignment& rhs) {
    return lhs.groups == rhs.groups && lhs.treatments == rhs.treatments &&
           lhs.group_size == rhs.group_size && lhs.n_groups == rhs.n_groups;
  }
};

/// Returns the first violated assignment invariant, or nullopt when the
/// assignment is valid for the population. Length mismatches throw.
inline std::optional<std::string> validate_assignment(const Assignment& assignment,
                                                      const Population& population) {
  const std::size_t n = population.size();
  if (assignment.groups.size() != n || assignment.treatments.size() != n) {
    throw InvalidInput("assignment length mismatch: population has " + std::to_string(n) +
                       " units, L has " + std::to_string(assignment.groups.size()) +
                       ", W has " + std::to_string(assignment.treatments.size()));
  }
  const std::size_t m = assignment.group_size;
  const std::size_t k = assignment.n_groups;
  if (m == 0 || k == 0 || m * k != n) {
    return "N = " + std::to_string(n) + " is not m x K = " + std::to_string(m) + " x " +
           std::to_string(k);
  }
  std::vector<std::size_t> counts(k + 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int g = assignment.groups[i];
    if (g < 1 || static_cast<std::size_t>(g) > k) {
      return "unit " + std::to_string(i) + " has group label " + std::to_string(g) +
             " outside 1.." + std::to_string(k);
    }
    ++counts[static_cast<std::size_t>(g)];
  }
  for (std::size_t g = 1; g <= k; ++g) {
    if (counts[g] != m) {
      return "group " + std::to_string(g) + " has " + std::to_string(counts[g]) +
             " members, expected " + std::to_string(m);
    }
  }
  const auto& alphabet = assignment.treatment_alphabet;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::find(alphabet.begin(), alphabet.end(), assignment.treatments[i]) == alphabet.end()) {
      return "unit " + std::to_string(i) + " has treatment " +
             std::to_string(assignment.treatments[i]) + " outside the treatment alphabet";
    }
  }
  return std::nullopt;
}

inline void require_valid(const Assignment& assignment, const Population& population) {
  if (auto violation = validate_assignment(assignment, population)) {
    throw InvalidInput("invalid assignment: " + *violation);
  }
}

}  // namespace grouprand
