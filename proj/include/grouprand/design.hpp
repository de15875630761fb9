#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "grouprand/error.hpp"
#include "grouprand/exposure.hpp"
#include "grouprand/permutation.hpp"
#include "grouprand/population.hpp"
#include "grouprand/rng.hpp"
#include "grouprand/stats.hpp"

namespace grouprand {

/// pi . C, moving group label and treatment of each unit together.
inline Assignment apply_permutation(const Permutation& perm, const Assignment& assignment) {
  Assignment out = assignment;
  out.groups = apply_permutation(perm, std::span<const int>(assignment.groups));
  out.treatments = apply_permutation(perm, std::span<const Code>(assignment.treatments));
  return out;
}

inline StabilizerSpec attribute_stabilizer(const Population& population) {
  return StabilizerSpec(population.attributes());
}

/// One draw of the design: C = pi . C0 with pi uniform on the stabilizer of A.
inline Assignment randomize(const Assignment& initial, const Population& population,
                            const StabilizerSpec& attribute_spec, Rng& rng) {
  require_valid(initial, population);
  detail::require(attribute_spec.size() == population.size(), "randomize: stabilizer size mismatch");
  return apply_permutation(sample_uniform_stabilizer(attribute_spec, rng), initial);
}

inline Assignment randomize(const Assignment& initial, const Population& population, Rng& rng) {
  return randomize(initial, population, attribute_stabilizer(population), rng);
}

/// Diagnostics for a sample of exposure vectors that should follow a
/// stratified completely randomized design.
struct ScrdReport {
  struct Marginal {
    Code stratum = 0;
    std::size_t units = 0;
    std::size_t classes = 0;
    stats::ChiSquareResult test;
    bool insufficient_variation = false;
  };
  struct Independence {
    Code stratum_a = 0;
    Code stratum_b = 0;
    std::size_t unit_a = 0;
    std::size_t unit_b = 0;
    stats::ChiSquareResult test;
  };

  std::size_t n_samples = 0;
  bool counts_constant = true;
  bool counts_match_expected = true;
  std::vector<Marginal> marginals;
  std::vector<Independence> independence;

  bool counts_ok() const { return counts_constant && counts_match_expected; }

  bool marginals_ok(double alpha) const {
    for (const auto& m : marginals)
      if (!m.insufficient_variation && m.test.p_value <= alpha) return false;
    return true;
  }

  bool independence_ok(double alpha) const {
    for (const auto& t : independence)
      if (!t.test.degenerate && t.test.p_value <= alpha) return false;
    return true;
  }

  bool passes(double alpha) const { return counts_ok() && marginals_ok(alpha) && independence_ok(alpha); }
};

namespace detail {

template <class E>
std::map<E, std::size_t> class_index(std::span<const std::vector<E>> samples, std::span<const std::size_t> units) {
  std::map<E, std::size_t> index;
  for (const auto& sample : samples)
    for (std::size_t i : units) index.try_emplace(sample[i], 0);
  std::size_t next = 0;
  for (auto& [h, id] : index) id = next++;
  return index;
}

}  // namespace detail

/// Checks (i) the count table is constant and equal to `expected`,
/// (ii) within each stratum every unit has the same exposure marginal,
/// (iii) exposures of one random unit pair per stratum pair are independent.
///
/// Check (ii) is a units-by-exposures homogeneity chi-square. Within one
/// draw a stratum's exposures are a uniformly permuted fixed multiset, so
/// the Pearson statistic is inflated by n/(n-1); it is rescaled by (n-1)/n.
template <class E>
ScrdReport verify_scrd(std::span<const std::vector<E>> samples, const Population& population,
                       const ScrdDescriptor<E>& expected, Rng& rng) {
  const std::size_t n = population.size();
  for (const auto& sample : samples) {
    if (sample.size() != n) {
      throw InvalidInput("verify_scrd: sample of length " + std::to_string(sample.size()) +
                         " for a population of " + std::to_string(n));
    }
  }
  ScrdReport report;
  report.n_samples = samples.size();
  if (samples.empty()) {
    report.counts_constant = false;
    report.counts_match_expected = false;
    return report;
  }

  const auto first = exposure_table(population, std::span<const E>(samples.front()));
  for (const auto& sample : samples.subspan(1)) {
    if (!(exposure_table(population, std::span<const E>(sample)) == first)) {
      report.counts_constant = false;
      break;
    }
  }
  // Zero-count cells in `expected` are not part of the comparison.
  for (const auto& [a, row] : expected.rows())
    for (const auto& [h, count] : row)
      if (first.count(a, h) != count) report.counts_match_expected = false;
  for (const auto& [a, row] : first.rows())
    for (const auto& [h, count] : row)
      if (expected.count(a, h) != count) report.counts_match_expected = false;

  std::vector<Code> live_strata;
  for (const auto& [a, units] : population.strata()) {
    if (units.empty()) continue;
    live_strata.push_back(a);
    ScrdReport::Marginal m;
    m.stratum = a;
    m.units = units.size();
    const auto index = detail::class_index(samples, std::span<const std::size_t>(units));
    m.classes = index.size();
    std::vector<std::vector<double>> table(units.size(), std::vector<double>(index.size(), 0.0));
    for (const auto& sample : samples)
      for (std::size_t r = 0; r < units.size(); ++r) table[r][index.at(sample[units[r]])] += 1.0;
    // Units that never change exposure across samples carry no information.
    bool varies = false;
    for (std::size_t r = 0; r < units.size() && !varies; ++r)
      varies = std::count_if(table[r].begin(), table[r].end(), [](double v) { return v > 0; }) > 1;
    if (varies) {
      const double correction =
          units.size() > 1 ? static_cast<double>(units.size() - 1) / static_cast<double>(units.size()) : 1.0;
      m.test = stats::pearson_independence(table, correction);
    } else {
      m.test.degenerate = true;
    }
    m.insufficient_variation = m.test.degenerate;
    report.marginals.push_back(m);
  }

  for (std::size_t x = 0; x < live_strata.size(); ++x) {
    for (std::size_t y = x + 1; y < live_strata.size(); ++y) {
      const auto units_a = population.stratum(live_strata[x]);
      const auto units_b = population.stratum(live_strata[y]);
      ScrdReport::Independence t;
      t.stratum_a = live_strata[x];
      t.stratum_b = live_strata[y];
      t.unit_a = units_a[uniform_below(rng, units_a.size())];
      t.unit_b = units_b[uniform_below(rng, units_b.size())];
      const std::size_t ua[] = {t.unit_a};
      const std::size_t ub[] = {t.unit_b};
      const auto index_a = detail::class_index(samples, std::span<const std::size_t>(ua));
      const auto index_b = detail::class_index(samples, std::span<const std::size_t>(ub));
      std::vector<std::vector<double>> table(index_a.size(), std::vector<double>(index_b.size(), 0.0));
      for (const auto& sample : samples) table[index_a.at(sample[t.unit_a])][index_b.at(sample[t.unit_b])] += 1.0;
      t.test = stats::pearson_independence(table);
      report.independence.push_back(t);
    }
  }
  return report;
}

template <class E>
ScrdReport verify_scrd(const std::vector<std::vector<E>>& samples, const Population& population,
                       const ScrdDescriptor<E>& expected, Rng& rng) {
  return verify_scrd(std::span<const std::vector<E>>(samples), population, expected, rng);
}

/// Stabilizer of the paired labels (A_i, U_i).
inline StabilizerSpec focal_stabilizer(const Population& population, std::span<const int> focal) {
  if (focal.size() != population.size()) {
    throw InvalidInput("focal indicator has length " + std::to_string(focal.size()) + ", population has " +
                       std::to_string(population.size()) + " units");
  }
  return pair_stabilizer(population.attributes(), focal);
}

/// Draw from the conditional exposure distribution given the focal set:
/// pi . H_obs with pi uniform on the stabilizer of (A, U).
template <class E>
std::vector<E> conditional_resample(std::span<const E> observed, std::span<const int> focal,
                                    const Population& population, Rng& rng) {
  detail::require(observed.size() == population.size(), "conditional_resample: exposure vector length mismatch");
  const auto spec = focal_stabilizer(population, focal);
  return apply_permutation(sample_uniform_stabilizer(spec, rng), observed);
}

template <class E>
std::vector<E> conditional_resample(const std::vector<E>& observed, const std::vector<int>& focal,
                                    const Population& population, Rng& rng) {
  return conditional_resample(std::span<const E>(observed), std::span<const int>(focal), population, rng);
}

}  // namespace grouprand
