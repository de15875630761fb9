#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "grouprand/error.hpp"
#include "grouprand/exposure.hpp"
#include "grouprand/population.hpp"
#include "grouprand/rng.hpp"
#include "grouprand/simplex.hpp"

namespace grouprand {

/// Exposure of a group member computed from its own type and the rest of
/// its group, in the same representation as `like`.
inline ExposureQuad member_exposure(const MemberType& self, std::span<const MemberType> peers, const ExposureQuad& like) {
  return make_quad(self.second, peers, like.reduced() ? QuadMode::reduced : QuadMode::full);
}

inline Exposure member_exposure(const MemberType& self, std::span<const MemberType> peers, const Exposure&) {
  Exposure e;
  e.own_treatment = self.second;
  e.peer_profile.assign(peers.begin(), peers.end());
  std::sort(e.peer_profile.begin(), e.peer_profile.end());
  return e;
}

/// A multiset of m (attribute, treatment) member types, together with how
/// many of its members receive each of the two target exposures.
struct GroupComposition {
  /// Sorted member types.
  std::vector<MemberType> members;
  /// c_a(G).
  std::map<Code, std::size_t> attribute_counts;
  /// Members with target exposure t (0 = k, 1 = k') by attribute.
  std::array<std::map<Code, std::size_t>, 2> target_counts;
  std::size_t treated = 0;

  std::size_t size() const { return members.size(); }

  std::size_t attribute_count(Code a) const {
    auto it = attribute_counts.find(a);
    return it == attribute_counts.end() ? 0 : it->second;
  }

  /// m_t(G) restricted to members with attribute a.
  std::size_t target_count(int target, Code a) const {
    const auto& counts = target_counts[static_cast<std::size_t>(target)];
    auto it = counts.find(a);
    return it == counts.end() ? 0 : it->second;
  }

  /// m_t(G).
  std::size_t target_count(int target) const {
    std::size_t total = 0;
    for (const auto& [a, n] : target_counts[static_cast<std::size_t>(target)]) total += n;
    return total;
  }

  std::size_t focal_count() const { return target_count(0) + target_count(1); }
};

template <class E>
GroupComposition make_composition(std::vector<MemberType> members, const E& k, const E& k_prime) {
  std::sort(members.begin(), members.end());
  GroupComposition g;
  g.members = std::move(members);
  std::vector<MemberType> peers;
  for (std::size_t i = 0; i < g.members.size(); ++i) {
    const auto& self = g.members[i];
    ++g.attribute_counts[self.first];
    if (self.second != 0) ++g.treated;
    peers.clear();
    for (std::size_t j = 0; j < g.members.size(); ++j)
      if (j != i) peers.push_back(g.members[j]);
    const E h = member_exposure(self, peers, k);
    if (h == k) ++g.target_counts[0][self.first];
    if (h == k_prime) ++g.target_counts[1][self.first];
  }
  return g;
}

/// All size-m multisets over attributes x treatments. With `focal_only`
/// the result is restricted to compositions where some member receives k
/// or k'.
template <class E>
std::vector<GroupComposition> enumerate_compositions(std::size_t m, const std::vector<Code>& attributes,
                                                     const std::vector<Code>& treatments, const E& k, const E& k_prime,
                                                     bool focal_only = true) {
  detail::require(m >= 2, "group size must be at least 2");
  std::vector<MemberType> types;
  std::vector<Code> a_sorted = attributes, w_sorted = treatments;
  std::sort(a_sorted.begin(), a_sorted.end());
  std::sort(w_sorted.begin(), w_sorted.end());
  for (Code a : a_sorted)
    for (Code w : w_sorted) types.emplace_back(a, w);

  std::vector<GroupComposition> out;
  std::vector<MemberType> current;
  std::function<void(std::size_t)> extend = [&](std::size_t start) {
    if (current.size() == m) {
      auto g = make_composition(current, k, k_prime);
      if (!focal_only || g.focal_count() > 0) out.push_back(std::move(g));
      return;
    }
    for (std::size_t t = start; t < types.size(); ++t) {
      current.push_back(types[t]);
      extend(t);
      current.pop_back();
    }
  };
  extend(0);
  return out;
}

/// The design integer program over group counts n(G) and its LP relaxation.
struct DesignProgram {
  std::vector<GroupComposition> compositions;
  lp::LinearProgram program;
  double eta = 1.2;
  std::optional<std::size_t> treated_budget;
  std::size_t group_size = 0;
  std::size_t n_units = 0;

  std::size_t n_variables() const { return compositions.size(); }
};

/// Objective: sum n(G) (m_k(G) + m_k'(G)). Rows: one capacity row per
/// attribute, n_{a,k} <= eta n_{a,k'} and n_{a,k'} <= eta n_{a,k} per
/// attribute, and optionally a total-treated budget.
inline DesignProgram build_program(std::vector<GroupComposition> compositions, const Population& population, double eta,
                                   std::optional<std::size_t> treated_budget = std::nullopt) {
  if (!(eta > 1.0)) throw InvalidInput("balance multiplier eta must exceed 1");
  DesignProgram d;
  d.eta = eta;
  d.treated_budget = treated_budget;
  d.n_units = population.size();
  d.group_size = compositions.empty() ? 0 : compositions.front().size();
  d.compositions = std::move(compositions);
  const std::size_t n = d.compositions.size();
  auto& lp = d.program;
  lp.objective.resize(n);
  for (std::size_t j = 0; j < n; ++j) lp.objective[j] = static_cast<double>(d.compositions[j].focal_count());

  for (Code a : population.alphabet()) {
    lp::Constraint row{std::vector<double>(n), lp::Sense::less_equal, static_cast<double>(population.stratum_size(a)),
                       "capacity[" + std::to_string(a) + "]"};
    for (std::size_t j = 0; j < n; ++j) row.coefficients[j] = static_cast<double>(d.compositions[j].attribute_count(a));
    lp.rows.push_back(std::move(row));
  }
  for (Code a : population.alphabet()) {
    for (int t = 0; t < 2; ++t) {
      lp::Constraint row{std::vector<double>(n), lp::Sense::less_equal, 0.0,
                         "balance[" + std::to_string(a) + "]:" + (t == 0 ? "k<=eta*k'" : "k'<=eta*k")};
      for (std::size_t j = 0; j < n; ++j) {
        const auto& g = d.compositions[j];
        row.coefficients[j] = static_cast<double>(g.target_count(t, a)) - eta * static_cast<double>(g.target_count(1 - t, a));
      }
      lp.rows.push_back(std::move(row));
    }
  }
  if (treated_budget) {
    lp::Constraint row{std::vector<double>(n), lp::Sense::less_equal, static_cast<double>(*treated_budget),
                       "treated_budget"};
    for (std::size_t j = 0; j < n; ++j) row.coefficients[j] = static_cast<double>(d.compositions[j].treated);
    lp.rows.push_back(std::move(row));
  }
  return d;
}

inline lp::Solution solve_lp(const DesignProgram& design) { return lp::solve_lp(design.program); }

/// Integer design point and the initial assignment that realizes it.
struct RealizedDesign {
  Assignment assignment;
  std::vector<std::size_t> group_counts;
  double integer_objective = 0.0;
  /// The floored LP point already satisfied every row.
  bool floor_feasible = true;
  /// Groups dropped after flooring to restore the balance rows.
  std::size_t repair_removed = 0;
  std::size_t composition_groups = 0;
  std::size_t filler_groups = 0;
  /// Achieved n_{a,k} / n_{a,k'} by attribute (only where both are positive).
  std::map<Code, double> balance_ratio;
};

namespace detail {

/// Index of a row violated by `x`, or rows.size().
inline std::size_t violated_row(const lp::LinearProgram& program, const std::vector<double>& x, double tol = 1e-7) {
  for (std::size_t i = 0; i < program.rows.size(); ++i) {
    lp::LinearProgram single{program.objective, {program.rows[i]}};
    if (!lp::is_feasible(single, x, tol)) return i;
  }
  return program.rows.size();
}

}  // namespace detail

/// Floors the LP point and checks it against every row. Flooring keeps the
/// capacity and budget rows but can tip a balance row past eta (the LP
/// vertex typically sits on the ratio bound), so while a row is violated
/// one group is removed from the composition with the largest positive
/// coefficient in that row. Then C0 is built: one group per selected
/// composition instance drawn from per-attribute unit pools (shuffled by
/// `rng`), then the leftover units, untreated and sorted by (attribute,
/// unit), chunked into the remaining groups.
inline RealizedDesign round_and_realize(const lp::Solution& solution, const DesignProgram& design,
                                        const Population& population, std::size_t group_size, Rng& rng) {
  detail::require(solution.status == lp::Status::optimal, "round_and_realize needs an optimal LP solution");
  detail::require(solution.values.size() == design.n_variables(), "LP solution does not match the program");
  detail::require(group_size >= 2, "group size must be at least 2");
  const std::size_t n = population.size();
  detail::require(n % group_size == 0, "population size " + std::to_string(n) + " is not a multiple of m = " +
                                           std::to_string(group_size));
  for (const auto& g : design.compositions) detail::require(g.size() == group_size, "composition size differs from m");

  RealizedDesign out;
  std::vector<double> point(design.n_variables());
  for (std::size_t j = 0; j < point.size(); ++j) {
    const auto c = static_cast<std::size_t>(std::floor(solution.values[j] + 1e-9));
    out.group_counts.push_back(c);
    point[j] = static_cast<double>(c);
  }
  out.floor_feasible = lp::is_feasible(design.program, point);
  for (std::size_t row = detail::violated_row(design.program, point); row < design.program.rows.size();
       row = detail::violated_row(design.program, point)) {
    const auto& coef = design.program.rows[row].coefficients;
    const bool lower = design.program.rows[row].sense == lp::Sense::greater_equal;
    std::size_t pick = point.size();
    for (std::size_t j = 0; j < point.size(); ++j) {
      if (out.group_counts[j] == 0 || (lower ? coef[j] >= 0 : coef[j] <= 0)) continue;
      if (pick == point.size() || std::abs(coef[j]) > std::abs(coef[pick])) pick = j;
    }
    if (pick == point.size()) throw Error("rounded design point violates '" + design.program.rows[row].name + "'");
    --out.group_counts[pick];
    point[pick] -= 1.0;
    ++out.repair_removed;
  }
  for (std::size_t j = 0; j < point.size(); ++j) out.integer_objective += point[j] * design.program.objective[j];

  std::map<Code, std::vector<std::size_t>> pool;
  for (const auto& [a, units] : population.strata()) {
    auto& p = pool[a];
    p.assign(units.begin(), units.end());
    fisher_yates(std::span<std::size_t>(p), rng);
    std::reverse(p.begin(), p.end());  // consumed from the back
  }

  Assignment& c0 = out.assignment;
  c0.group_size = group_size;
  c0.n_groups = n / group_size;
  c0.groups.assign(n, 0);
  c0.treatments.assign(n, 0);
  int label = 0;
  for (std::size_t j = 0; j < design.compositions.size(); ++j) {
    for (std::size_t copy = 0; copy < out.group_counts[j]; ++copy) {
      ++label;
      for (const auto& [a, w] : design.compositions[j].members) {
        auto& p = pool.at(a);
        if (p.empty()) throw Error("attribute pool exhausted while realizing the design");
        const std::size_t unit = p.back();
        p.pop_back();
        c0.groups[unit] = label;
        c0.treatments[unit] = w;
      }
    }
  }
  out.composition_groups = static_cast<std::size_t>(label);

  std::vector<std::size_t> leftovers;
  for (auto& [a, p] : pool) {
    std::sort(p.begin(), p.end());
    leftovers.insert(leftovers.end(), p.begin(), p.end());
  }
  if (leftovers.size() % group_size != 0) throw Error("leftover units do not fill whole groups");
  for (std::size_t i = 0; i < leftovers.size(); ++i) {
    if (i % group_size == 0) ++label;
    c0.groups[leftovers[i]] = label;
  }
  out.filler_groups = leftovers.size() / group_size;
  if (static_cast<std::size_t>(label) != c0.n_groups) throw Error("realized design has the wrong number of groups");

  for (Code a : population.alphabet()) {
    std::size_t nk = 0, nkp = 0;
    for (std::size_t j = 0; j < design.compositions.size(); ++j) {
      nk += out.group_counts[j] * design.compositions[j].target_count(0, a);
      nkp += out.group_counts[j] * design.compositions[j].target_count(1, a);
    }
    if (nk > 0 && nkp > 0) out.balance_ratio[a] = static_cast<double>(nk) / static_cast<double>(nkp);
  }
  return out;
}

/// Full pipeline: enumerate, build, solve, round, realize.
struct OptimalDesign {
  DesignProgram program;
  lp::Solution solution;
  RealizedDesign realized;
};

template <class E>
OptimalDesign optimal_design(const Population& population, std::size_t group_size, const E& k, const E& k_prime,
                             double eta, Rng& rng, std::optional<std::size_t> treated_budget = std::nullopt,
                             const std::vector<Code>& treatments = binary_alphabet()) {
  OptimalDesign d;
  d.program = build_program(enumerate_compositions(group_size, population.alphabet(), treatments, k, k_prime),
                            population, eta, treated_budget);
  d.solution = solve_lp(d.program);
  d.realized = round_and_realize(d.solution, d.program, population, group_size, rng);
  d.realized.assignment.treatment_alphabet = treatments;
  return d;
}

// ---- baselines -------------------------------------------------------------

/// Canonical L (consecutive blocks of m) and W (the first `treated_count`
/// units treated), each shuffled uniformly over all N! orderings and
/// independently of each other.
inline Assignment random_init(const Population& population, std::size_t group_size, std::size_t n_groups,
                              std::size_t treated_count, Rng& rng) {
  const std::size_t n = population.size();
  detail::require(group_size * n_groups == n, "N must equal m x K");
  detail::require(treated_count <= n, "treated_count exceeds N");
  Assignment c;
  c.group_size = group_size;
  c.n_groups = n_groups;
  c.groups.resize(n);
  c.treatments.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) c.groups[i] = static_cast<int>(i / group_size) + 1;
  std::fill_n(c.treatments.begin(), treated_count, 1);
  fisher_yates(std::span<int>(c.groups), rng);
  fisher_yates(std::span<Code>(c.treatments), rng);
  return c;
}

/// n_{a,t}: units with attribute a receiving target t (0 = k, 1 = k').
using TargetCounts = std::map<Code, std::array<std::size_t, 2>>;

template <class E>
TargetCounts target_counts(const Population& population, std::span<const E> exposures, const E& k, const E& k_prime) {
  TargetCounts counts;
  for (Code a : population.alphabet()) counts[a] = {0, 0};
  for (std::size_t i = 0; i < exposures.size(); ++i) {
    if (exposures[i] == k) ++counts[population.attribute(i)][0];
    if (exposures[i] == k_prime) ++counts[population.attribute(i)][1];
  }
  return counts;
}

inline std::size_t total_focal(const TargetCounts& counts) {
  std::size_t total = 0;
  for (const auto& [a, c] : counts) total += c[0] + c[1];
  return total;
}

struct RejectionResult {
  Assignment assignment;
  std::size_t accepted = 0;
  TargetCounts counts;
  std::vector<std::string> warnings;
};

/// Start from a random initialization and, for M rounds, propose
/// independent uniform permutations of L and W; accept when the focal
/// total strictly grows and, for every non-empty attribute stratum,
/// 1/eta <= n'_{a,k} / n'_{a,k'} <= eta.
inline RejectionResult rejection_sampling_init(const Population& population, std::size_t group_size,
                                               std::size_t n_groups, std::size_t treated_count, std::size_t iterations,
                                               double eta, const ExposureQuad& k, const ExposureQuad& k_prime, Rng& rng) {
  detail::require(iterations >= 1, "rejection sampling needs M >= 1");
  detail::require(eta >= 1.0, "eta must be at least 1");
  const QuadMode mode = k.reduced() ? QuadMode::reduced : QuadMode::full;
  RejectionResult result;
  result.assignment = random_init(population, group_size, n_groups, treated_count, rng);
  {
    const auto h = exposure_quadruple(population, result.assignment, mode);
    result.counts = target_counts(population, std::span<const ExposureQuad>(h), k, k_prime);
  }
  Assignment proposal = result.assignment;
  for (std::size_t it = 0; it < iterations; ++it) {
    proposal.groups = result.assignment.groups;
    proposal.treatments = result.assignment.treatments;
    fisher_yates(std::span<int>(proposal.groups), rng);
    fisher_yates(std::span<Code>(proposal.treatments), rng);
    const auto h = exposure_quadruple(population, proposal, mode);
    const auto counts = target_counts(population, std::span<const ExposureQuad>(h), k, k_prime);
    if (total_focal(counts) <= total_focal(result.counts)) continue;
    bool balanced = true;
    for (const auto& [a, c] : counts) {
      if (population.stratum_size(a) == 0) continue;
      const double nk = static_cast<double>(c[0]), nkp = static_cast<double>(c[1]);
      if (c[1] == 0 || c[0] == 0 || nk > eta * nkp || nkp > eta * nk) {
        balanced = false;
        break;
      }
    }
    if (!balanced) continue;
    result.assignment = proposal;
    result.counts = counts;
    ++result.accepted;
  }
  if (result.accepted == 0) {
    result.warnings.push_back("rejection sampling accepted no proposal in " + std::to_string(iterations) +
                              " iterations; returning the initial random draw");
  }
  return result;
}

}  // namespace grouprand
