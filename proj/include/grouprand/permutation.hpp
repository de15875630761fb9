#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "grouprand/error.hpp"
#include "grouprand/rng.hpp"

namespace grouprand {

/// Bijection on {0..N-1}. `forward()[i]` is the image of position i; the
/// inverse is kept alongside because the group action indexes by it.
class Permutation {
 public:
  Permutation() = default;

  explicit Permutation(std::vector<std::size_t> forward) : forward_(std::move(forward)) {
    const std::size_t n = forward_.size();
    inverse_.assign(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t j = forward_[i];
      detail::require(j < n && inverse_[j] == n, "permutation image is not a bijection");
      inverse_[j] = i;
    }
  }

  static Permutation identity(std::size_t n) {
    std::vector<std::size_t> f(n);
    std::iota(f.begin(), f.end(), std::size_t{0});
    return Permutation(std::move(f));
  }

  std::size_t size() const { return forward_.size(); }
  std::size_t operator()(std::size_t i) const { return forward_[i]; }
  std::size_t preimage(std::size_t i) const { return inverse_[i]; }
  std::span<const std::size_t> forward() const { return forward_; }
  std::span<const std::size_t> inverse_map() const { return inverse_; }

  Permutation inverse() const { return Permutation(inverse_); }

  bool is_identity() const {
    for (std::size_t i = 0; i < forward_.size(); ++i)
      if (forward_[i] != i) return false;
    return true;
  }

  friend bool operator==(const Permutation& a, const Permutation& b) { return a.forward_ == b.forward_; }
  friend bool operator<(const Permutation& a, const Permutation& b) { return a.forward_ < b.forward_; }

 private:
  std::vector<std::size_t> forward_;
  std::vector<std::size_t> inverse_;
};

/// (outer o inner)(i) = outer(inner(i)); acting with the result equals
/// acting with `inner` first and then `outer`.
inline Permutation compose(const Permutation& outer, const Permutation& inner) {
  detail::require(outer.size() == inner.size(), "cannot compose permutations of different sizes");
  std::vector<std::size_t> f(inner.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = outer(inner(i));
  return Permutation(std::move(f));
}

/// Group action: result[i] = values[perm^{-1}(i)].
template <class T>
std::vector<T> apply_permutation(const Permutation& perm, std::span<const T> values) {
  if (values.size() != perm.size()) {
    throw InvalidInput("apply_permutation: vector has length " + std::to_string(values.size()) +
                       ", permutation has size " + std::to_string(perm.size()));
  }
  std::vector<T> out;
  out.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out.push_back(values[perm.preimage(i)]);
  return out;
}

template <class T>
std::vector<T> apply_permutation(const Permutation& perm, const std::vector<T>& values) {
  return apply_permutation(perm, std::span<const T>(values));
}

/// The stabilizer of a label vector: all permutations that map every label
/// stratum onto itself. Labels are reduced to dense stratum ids.
class StabilizerSpec {
 public:
  template <class Label>
  explicit StabilizerSpec(std::span<const Label> labels) {
    std::map<Label, std::size_t> ids;
    stratum_of_.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto [it, inserted] = ids.try_emplace(labels[i], ids.size());
      (void)inserted;
      stratum_of_.push_back(it->second);
    }
    // Number strata by label order so iteration is independent of unit order.
    std::vector<std::size_t> rank(ids.size());
    std::size_t r = 0;
    for (const auto& [label, id] : ids) rank[id] = r++;
    for (auto& s : stratum_of_) s = rank[s];
    strata_.resize(ids.size());
    for (std::size_t i = 0; i < stratum_of_.size(); ++i) strata_[stratum_of_[i]].push_back(i);
  }

  template <class Label>
  explicit StabilizerSpec(const std::vector<Label>& labels) : StabilizerSpec(std::span<const Label>(labels)) {}

  std::size_t size() const { return stratum_of_.size(); }
  std::size_t stratum_of(std::size_t unit) const { return stratum_of_[unit]; }
  const std::vector<std::vector<std::size_t>>& strata() const { return strata_; }

  bool fixes_labels(const Permutation& perm) const {
    if (perm.size() != size()) return false;
    for (std::size_t i = 0; i < size(); ++i)
      if (stratum_of_[perm.preimage(i)] != stratum_of_[i]) return false;
    return true;
  }

 private:
  std::vector<std::size_t> stratum_of_;
  std::vector<std::vector<std::size_t>> strata_;
};

/// Stabilizer of the pair labels (first_i, second_i), e.g. (A_i, U_i).
template <class L1, class L2>
StabilizerSpec pair_stabilizer(std::span<const L1> first, std::span<const L2> second) {
  if (first.size() != second.size()) {
    throw InvalidInput("pair_stabilizer: label vectors have lengths " + std::to_string(first.size()) +
                       " and " + std::to_string(second.size()));
  }
  std::vector<std::pair<L1, L2>> pairs;
  pairs.reserve(first.size());
  for (std::size_t i = 0; i < first.size(); ++i) pairs.emplace_back(first[i], second[i]);
  return StabilizerSpec(pairs);
}

/// Uniform draw from the stabilizer: an independent Fisher-Yates shuffle
/// inside every stratum.
inline Permutation sample_uniform_stabilizer(const StabilizerSpec& spec, Rng& rng) {
  std::vector<std::size_t> forward(spec.size());
  std::vector<std::size_t> images;
  for (const auto& stratum : spec.strata()) {
    images.assign(stratum.begin(), stratum.end());
    fisher_yates(std::span<std::size_t>(images), rng);
    for (std::size_t j = 0; j < stratum.size(); ++j) forward[stratum[j]] = images[j];
  }
  Permutation perm(std::move(forward));
  assert(spec.fixes_labels(perm));
  return perm;
}

/// |stabilizer| = prod over strata of (stratum size)!.
inline boost::multiprecision::cpp_int stabilizer_order(const StabilizerSpec& spec) {
  boost::multiprecision::cpp_int order = 1;
  for (const auto& stratum : spec.strata())
    for (std::size_t k = 2; k <= stratum.size(); ++k) order *= k;
  return order;
}

inline double log_stabilizer_order(const StabilizerSpec& spec) {
  double total = 0.0;
  for (const auto& stratum : spec.strata()) total += std::lgamma(static_cast<double>(stratum.size()) + 1.0);
  return total;
}

/// Calls `visit(const Permutation&)` once for every element of the
/// stabilizer, in a fixed order. The caller bounds the cost.
template <class Visitor>
void for_each_stabilizer_element(const StabilizerSpec& spec, Visitor&& visit) {
  const auto& strata = spec.strata();
  std::vector<std::vector<std::size_t>> images(strata.begin(), strata.end());
  std::vector<std::size_t> forward(spec.size());
  while (true) {
    for (std::size_t s = 0; s < strata.size(); ++s)
      for (std::size_t j = 0; j < strata[s].size(); ++j) forward[strata[s][j]] = images[s][j];
    visit(Permutation(forward));
    std::size_t s = 0;
    // Odometer: advance the first stratum whose permutation is not last.
    for (; s < images.size(); ++s) {
      if (std::next_permutation(images[s].begin(), images[s].end())) break;
    }
    if (s == images.size()) return;
  }
}

}  // namespace grouprand
