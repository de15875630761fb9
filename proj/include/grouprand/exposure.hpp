#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "grouprand/error.hpp"
#include "grouprand/population.hpp"

namespace grouprand {

/// (attribute, treatment) of one unit.
using MemberType = std::pair<Code, Code>;

/// General exposure: own treatment plus the sorted multiset of peers'
/// (attribute, treatment) pairs.
struct Exposure {
  Code own_treatment = 0;
  std::vector<MemberType> peer_profile;

  auto operator<=>(const Exposure&) const = default;
  bool operator==(const Exposure&) const = default;
};

/// Binary-alphabet summary (sum A_j, sum W_j, sum A_j W_j, W_i) over peers.
/// In reduced mode the interaction sum is dropped and stored as
/// `kDropped`.
struct ExposureQuad {
  static constexpr int kDropped = -1;

  int peer_attr_sum = 0;
  int peer_treat_sum = 0;
  int peer_attr_treat_sum = 0;
  int own_treatment = 0;

  bool reduced() const { return peer_attr_treat_sum == kDropped; }

  auto operator<=>(const ExposureQuad&) const = default;
  bool operator==(const ExposureQuad&) const = default;
};

enum class QuadMode { full, reduced };

namespace detail {

inline std::vector<std::vector<std::size_t>> group_members(const Assignment& assignment) {
  std::vector<std::vector<std::size_t>> members(assignment.n_groups);
  for (std::size_t i = 0; i < assignment.size(); ++i)
    members[static_cast<std::size_t>(assignment.groups[i] - 1)].push_back(i);
  return members;
}

inline bool is_binary(const std::vector<Code>& alphabet) {
  return std::all_of(alphabet.begin(), alphabet.end(), [](Code c) { return c == 0 || c == 1; });
}

}  // namespace detail

inline std::vector<Exposure> exposure_map(const Population& population, const Assignment& assignment) {
  require_valid(assignment, population);
  std::vector<Exposure> out(population.size());
  for (const auto& members : detail::group_members(assignment)) {
    for (std::size_t i : members) {
      Exposure& e = out[i];
      e.own_treatment = assignment.treatments[i];
      e.peer_profile.reserve(members.size() - 1);
      for (std::size_t j : members)
        if (j != i) e.peer_profile.emplace_back(population.attribute(j), assignment.treatments[j]);
      std::sort(e.peer_profile.begin(), e.peer_profile.end());
    }
  }
  return out;
}

/// Quadruple of a unit given its own treatment and its peers' types.
inline ExposureQuad make_quad(Code own_treatment, std::span<const MemberType> peers,
                              QuadMode mode = QuadMode::full) {
  ExposureQuad q;
  q.own_treatment = own_treatment;
  for (const auto& [a, w] : peers) {
    q.peer_attr_sum += a;
    q.peer_treat_sum += w;
    q.peer_attr_treat_sum += a * w;
  }
  if (mode == QuadMode::reduced) q.peer_attr_treat_sum = ExposureQuad::kDropped;
  return q;
}

inline ExposureQuad to_quad(const Exposure& exposure, QuadMode mode = QuadMode::full) {
  return make_quad(exposure.own_treatment, exposure.peer_profile, mode);
}

inline std::vector<ExposureQuad> exposure_quadruple(const Population& population, const Assignment& assignment,
                                                    QuadMode mode = QuadMode::full) {
  if (!detail::is_binary(population.alphabet()) || !detail::is_binary(assignment.treatment_alphabet)) {
    throw InvalidInput("exposure_quadruple requires binary attribute and treatment alphabets");
  }
  require_valid(assignment, population);
  std::vector<ExposureQuad> out(population.size());
  for (const auto& members : detail::group_members(assignment)) {
    int a_sum = 0, w_sum = 0, aw_sum = 0;
    for (std::size_t j : members) {
      a_sum += population.attribute(j);
      w_sum += assignment.treatments[j];
      aw_sum += population.attribute(j) * assignment.treatments[j];
    }
    for (std::size_t i : members) {
      const int a = population.attribute(i);
      const int w = assignment.treatments[i];
      ExposureQuad& q = out[i];
      q.peer_attr_sum = a_sum - a;
      q.peer_treat_sum = w_sum - w;
      q.peer_attr_treat_sum = mode == QuadMode::full ? aw_sum - a * w : ExposureQuad::kDropped;
      q.own_treatment = w;
    }
  }
  return out;
}

/// Count table n_{a,h}: units per (attribute stratum, exposure).
template <class E>
class ScrdDescriptor {
 public:
  using Row = std::map<E, std::size_t>;

  ScrdDescriptor() = default;

  void add(Code a, const E& h, std::size_t n = 1) { counts_[a][h] += n; }
  void ensure_key(Code a, const E& h) { counts_[a].try_emplace(h, 0); }

  std::size_t count(Code a, const E& h) const {
    auto row = counts_.find(a);
    if (row == counts_.end()) return 0;
    auto cell = row->second.find(h);
    return cell == row->second.end() ? 0 : cell->second;
  }

  std::size_t stratum_total(Code a) const {
    auto row = counts_.find(a);
    if (row == counts_.end()) return 0;
    std::size_t total = 0;
    for (const auto& [h, n] : row->second) total += n;
    return total;
  }

  const std::map<Code, Row>& rows() const { return counts_; }

  bool operator==(const ScrdDescriptor&) const = default;

 private:
  std::map<Code, Row> counts_;
};

/// Exposure counts per stratum. Every declared attribute level gets a
/// row; `keys` adds zero-count cells for exposure classes that must be
/// present even when unrealized.
template <class E>
ScrdDescriptor<E> exposure_table(const Population& population, std::span<const E> exposures,
                                 std::span<const E> keys = {}) {
  if (exposures.size() != population.size()) {
    throw InvalidInput("exposure_table: " + std::to_string(exposures.size()) + " exposures for " +
                       std::to_string(population.size()) + " units");
  }
  ScrdDescriptor<E> table;
  for (Code a : population.alphabet())
    for (const E& h : keys) table.ensure_key(a, h);
  for (std::size_t i = 0; i < exposures.size(); ++i) table.add(population.attribute(i), exposures[i]);
  return table;
}

template <class E>
ScrdDescriptor<E> exposure_table(const Population& population, const std::vector<E>& exposures,
                                 const std::vector<E>& keys = {}) {
  return exposure_table(population, std::span<const E>(exposures), std::span<const E>(keys));
}

// ---- text encodings -------------------------------------------------------

inline std::string to_string(const ExposureQuad& q) {
  std::ostringstream os;
  os << q.peer_attr_sum << ':' << q.peer_treat_sum << ':';
  if (!q.reduced()) os << q.peer_attr_treat_sum << ':';
  os << q.own_treatment;
  return os.str();
}

/// Parses `a_sum:w_sum:aw_sum:own` (or `a_sum:w_sum:own` for reduced mode).
inline ExposureQuad parse_quad(const std::string& text) {
  std::vector<int> fields;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    try {
      std::size_t used = 0;
      fields.push_back(std::stoi(item, &used));
      if (used != item.size()) throw InvalidInput("");
    } catch (const std::exception&) {
      throw InvalidInput("malformed exposure quadruple '" + text + "'");
    }
  }
  ExposureQuad q;
  if (fields.size() == 4) {
    q = {fields[0], fields[1], fields[2], fields[3]};
  } else if (fields.size() == 3) {
    q = {fields[0], fields[1], ExposureQuad::kDropped, fields[2]};
  } else {
    throw InvalidInput("exposure quadruple '" + text + "' needs 3 or 4 fields");
  }
  return q;
}

inline std::string to_string(const Exposure& e) {
  std::ostringstream os;
  for (const auto& [a, w] : e.peer_profile) os << '(' << a << ',' << w << ')';
  os << '|' << e.own_treatment;
  return os.str();
}

}  // namespace grouprand
