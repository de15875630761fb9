#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "grouprand/design.hpp"
#include "grouprand/error.hpp"
#include "grouprand/exposure.hpp"
#include "grouprand/permutation.hpp"
#include "grouprand/population.hpp"
#include "grouprand/rng.hpp"
#include "grouprand/stats.hpp"

namespace grouprand {

// ---- Neymanian estimation --------------------------------------------------

namespace detail {

template <class E>
std::vector<double> cell_outcomes(std::span<const double> outcomes, std::span<const E> exposures,
                                  const Population& population, Code a, const E& k) {
  std::vector<double> values;
  for (std::size_t i : population.stratum(a))
    if (exposures[i] == k) values.push_back(outcomes[i]);
  return values;
}

template <class E>
void check_lengths(std::span<const double> outcomes, std::span<const E> exposures, const Population& population) {
  if (outcomes.size() != population.size() || exposures.size() != population.size()) {
    throw InvalidInput("outcome/exposure length mismatch: " + std::to_string(outcomes.size()) + " outcomes, " +
                       std::to_string(exposures.size()) + " exposures, " + std::to_string(population.size()) +
                       " units");
  }
}

}  // namespace detail

/// Mean outcome over units with attribute `a` and exposure `k`.
template <class E>
double stratum_mean(std::span<const double> outcomes, std::span<const E> exposures, const Population& population,
                    Code a, const E& k) {
  detail::check_lengths(outcomes, exposures, population);
  const auto values = detail::cell_outcomes(outcomes, exposures, population, a, k);
  if (values.empty()) throw EmptyCell("no units with attribute " + std::to_string(a) + " in the requested exposure");
  return stats::mean(values);
}

struct StratumContrast {
  Code stratum = 0;
  std::size_t stratum_size = 0;
  std::size_t n_k = 0;
  std::size_t n_k_prime = 0;
  /// False when either cell has fewer than two units.
  bool included = false;
  double estimate = 0.0;
  double variance = 0.0;
};

template <class E>
struct ContrastEstimate {
  E k{};
  E k_prime{};
  std::vector<StratumContrast> strata;
  double estimate = 0.0;
  double variance = 0.0;
  double alpha = 0.05;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<std::string> warnings;
};

/// Stratified difference in means with the conservative Neyman variance
/// and a Wald interval at level 1 - alpha.
template <class E>
ContrastEstimate<E> estimate_contrast(std::span<const double> outcomes, std::span<const E> exposures,
                                      const Population& population, const E& k, const E& k_prime, double alpha) {
  detail::check_lengths(outcomes, exposures, population);
  detail::require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
  ContrastEstimate<E> result;
  result.k = k;
  result.k_prime = k_prime;
  result.alpha = alpha;
  const double n_total = static_cast<double>(population.size());
  bool any = false;
  for (const auto& [a, units] : population.strata()) {
    StratumContrast s;
    s.stratum = a;
    s.stratum_size = units.size();
    const auto yk = detail::cell_outcomes(outcomes, exposures, population, a, k);
    const auto ykp = detail::cell_outcomes(outcomes, exposures, population, a, k_prime);
    s.n_k = yk.size();
    s.n_k_prime = ykp.size();
    s.included = s.n_k >= 2 && s.n_k_prime >= 2;
    if (s.included) {
      s.estimate = stats::mean(yk) - stats::mean(ykp);
      s.variance = stats::sample_variance(yk) / static_cast<double>(s.n_k) +
                   stats::sample_variance(ykp) / static_cast<double>(s.n_k_prime);
      const double weight = static_cast<double>(s.stratum_size) / n_total;
      result.estimate += weight * s.estimate;
      result.variance += weight * weight * s.variance;
      any = true;
    } else if (!units.empty()) {
      result.warnings.push_back("stratum " + std::to_string(a) + " dropped: cell sizes " + std::to_string(s.n_k) +
                                " and " + std::to_string(s.n_k_prime) + " (need >= 2 each)");
    }
    result.strata.push_back(s);
  }
  if (!any) throw UndefinedStatistic("no stratum has at least two units in both exposure cells");
  const double half_width = stats::normal_quantile(1.0 - alpha / 2.0) * std::sqrt(result.variance);
  result.ci_low = result.estimate - half_width;
  result.ci_high = result.estimate + half_width;
  return result;
}

template <class E>
ContrastEstimate<E> estimate_contrast(const std::vector<double>& outcomes, const std::vector<E>& exposures,
                                      const Population& population, const E& k, const E& k_prime, double alpha) {
  return estimate_contrast(std::span<const double>(outcomes), std::span<const E>(exposures), population, k, k_prime,
                           alpha);
}

// ---- Fisherian tests --------------------------------------------------------

/// U_i = 1 iff exposure i lies in `focal_exposures`.
template <class E>
std::vector<int> focal_set(std::span<const E> exposures, const std::set<E>& focal_exposures) {
  std::vector<int> u(exposures.size(), 0);
  for (std::size_t i = 0; i < exposures.size(); ++i) u[i] = focal_exposures.contains(exposures[i]) ? 1 : 0;
  return u;
}

template <class E>
std::vector<int> focal_set(const std::vector<E>& exposures, const std::set<E>& focal_exposures) {
  return focal_set(std::span<const E>(exposures), focal_exposures);
}

enum class Sidedness { two_sided, greater, less };

struct TestResult {
  double statistic_observed = 0.0;
  double p_value = 1.0;
  std::size_t n_resamples = 0;
  /// True when the reference set is the full stabilizer rather than a
  /// Monte Carlo sample (then p counts the identity and has no add-one).
  bool exhaustive = false;
  /// Focal counts per stratum: {exposure k, exposure k'}.
  std::map<Code, std::array<std::size_t, 2>> focal_counts;
  /// Every resample reproduced the observed statistic exactly.
  bool degenerate = false;
};

namespace detail {

inline double oriented(double t, Sidedness side) {
  switch (side) {
    case Sidedness::two_sided: return std::abs(t);
    case Sidedness::greater: return t;
    case Sidedness::less: return -t;
  }
  return t;
}

/// Ties within this band count as "at least as extreme".
inline double tie_tolerance(double t) { return 1e-9 * std::max(1.0, std::abs(t)); }

/// Focal units of a pairwise test and their k / k' labels; the statistic
/// is evaluated in unit-index order so identical labelings give bitwise
/// identical values.
class PairwiseFocal {
 public:
  template <class E>
  PairwiseFocal(std::span<const double> outcomes, std::span<const E> exposures, const Population& population,
                const E& k, const E& k_prime) {
    detail::check_lengths(outcomes, exposures, population);
    detail::require(!(k == k_prime), "pairwise test needs two distinct exposures");
    std::map<Code, std::size_t> stratum_slot;
    for (std::size_t i = 0; i < exposures.size(); ++i) {
      const bool is_k = exposures[i] == k;
      if (!is_k && !(exposures[i] == k_prime)) continue;
      const Code a = population.attribute(i);
      units_.push_back(i);
      y_.push_back(outcomes[i]);
      labels_.push_back(is_k ? 0 : 1);
      auto& counts = focal_counts_[a];
      ++counts[is_k ? 0 : 1];
      auto [it, fresh] = stratum_slot.try_emplace(a, slots_.size());
      if (fresh) slots_.emplace_back();
      slots_[it->second].push_back(units_.size() - 1);
    }
    for (const auto& [a, c] : focal_counts_) {
      n_k_ += c[0];
      n_kp_ += c[1];
    }
    if (n_k_ == 0 || n_kp_ == 0) {
      throw UndefinedStatistic("pairwise statistic undefined: " + std::to_string(n_k_) + " focal units with k, " +
                               std::to_string(n_kp_) + " with k'");
    }
  }

  double statistic(std::span<const unsigned char> labels) const {
    double sum_k = 0.0, sum_kp = 0.0;
    for (std::size_t j = 0; j < labels.size(); ++j) (labels[j] == 0 ? sum_k : sum_kp) += y_[j];
    return sum_k / static_cast<double>(n_k_) - sum_kp / static_cast<double>(n_kp_);
  }

  double observed() const { return statistic(labels_); }

  /// Shuffles the labels inside each attribute stratum of the focal set
  /// (the action of a uniform element of the (A, U) stabilizer).
  void resample(std::vector<unsigned char>& labels, Rng& rng) const {
    std::vector<unsigned char> buffer;
    for (const auto& slot : slots_) {
      buffer.clear();
      for (std::size_t j : slot) buffer.push_back(labels_[j]);
      fisher_yates(std::span<unsigned char>(buffer), rng);
      for (std::size_t j = 0; j < slot.size(); ++j) labels[slot[j]] = buffer[j];
    }
  }

  template <class E>
  std::vector<unsigned char> labels_from(std::span<const E> exposures, const E& k, const E& k_prime) const {
    std::vector<unsigned char> labels(units_.size());
    for (std::size_t j = 0; j < units_.size(); ++j) {
      const E& h = exposures[units_[j]];
      if (!(h == k) && !(h == k_prime)) throw Error("resampled focal unit left the focal exposure set");
      labels[j] = h == k ? 0 : 1;
    }
    return labels;
  }

  const std::vector<unsigned char>& labels() const { return labels_; }
  const std::map<Code, std::array<std::size_t, 2>>& focal_counts() const { return focal_counts_; }
  const std::vector<std::size_t>& units() const { return units_; }

 private:
  std::vector<std::size_t> units_;
  std::vector<double> y_;
  std::vector<unsigned char> labels_;
  std::vector<std::vector<std::size_t>> slots_;
  std::map<Code, std::array<std::size_t, 2>> focal_counts_;
  std::size_t n_k_ = 0;
  std::size_t n_kp_ = 0;
};

inline constexpr double kMaxEnumeration = 5e7;

}  // namespace detail

/// Conditional randomization test of Y(k) = Y(k') on the focal set
/// {i : H_i in {k, k'}}, with R Monte Carlo resamples from the (A, U)
/// stabilizer and the add-one p-value (1 + #{T' >= T_obs}) / (R + 1).
template <class E>
TestResult conditional_fisher_test(std::span<const double> outcomes, std::span<const E> observed,
                                   const Population& population, const E& k, const E& k_prime, std::size_t resamples,
                                   Rng& rng, Sidedness side = Sidedness::two_sided) {
  detail::require(resamples >= 1, "conditional_fisher_test needs at least one resample");
  const detail::PairwiseFocal focal(outcomes, observed, population, k, k_prime);
  TestResult result;
  result.focal_counts = focal.focal_counts();
  result.n_resamples = resamples;
  result.statistic_observed = focal.observed();
  const double t_obs = detail::oriented(result.statistic_observed, side);
  const double tol = detail::tie_tolerance(t_obs);
  std::size_t extreme = 0;
  bool all_equal = true;
  std::vector<unsigned char> labels = focal.labels();
  for (std::size_t r = 0; r < resamples; ++r) {
    focal.resample(labels, rng);
    const double t = focal.statistic(labels);
    if (t != result.statistic_observed) all_equal = false;
    if (detail::oriented(t, side) >= t_obs - tol) ++extreme;
  }
  result.p_value = static_cast<double>(1 + extreme) / static_cast<double>(resamples + 1);
  result.degenerate = all_equal;
  return result;
}

template <class E>
TestResult conditional_fisher_test(const std::vector<double>& outcomes, const std::vector<E>& observed,
                                   const Population& population, const E& k, const E& k_prime, std::size_t resamples,
                                   Rng& rng, Sidedness side = Sidedness::two_sided) {
  return conditional_fisher_test(std::span<const double>(outcomes), std::span<const E>(observed), population, k,
                                 k_prime, resamples, rng, side);
}

/// Exact conditional p-value: the statistic is evaluated on pi . H_obs for
/// every pi in the stabilizer of (A, U) restricted to the focal strata
/// (non-focal units do not enter the statistic, so the remaining factor of
/// the stabilizer only repeats each value equally often).
template <class E>
TestResult conditional_fisher_test_exact(std::span<const double> outcomes, std::span<const E> observed,
                                         const Population& population, const E& k, const E& k_prime,
                                         Sidedness side = Sidedness::two_sided) {
  const detail::PairwiseFocal focal(outcomes, observed, population, k, k_prime);
  std::vector<long long> labels(population.size());
  std::vector<char> is_focal(population.size(), 0);
  for (std::size_t i : focal.units()) is_focal[i] = 1;
  for (std::size_t i = 0; i < labels.size(); ++i)
    labels[i] = is_focal[i] ? population.attribute(i) : -1 - static_cast<long long>(i);
  const StabilizerSpec spec(labels);
  if (log_stabilizer_order(spec) > std::log(detail::kMaxEnumeration)) {
    throw InvalidInput("focal stabilizer too large to enumerate");
  }
  TestResult result;
  result.focal_counts = focal.focal_counts();
  result.exhaustive = true;
  result.statistic_observed = focal.observed();
  const double t_obs = detail::oriented(result.statistic_observed, side);
  const double tol = detail::tie_tolerance(t_obs);
  std::size_t extreme = 0, total = 0;
  bool all_equal = true;
  for_each_stabilizer_element(spec, [&](const Permutation& perm) {
    const auto permuted = apply_permutation(perm, observed);
    const double t = focal.statistic(focal.labels_from(std::span<const E>(permuted), k, k_prime));
    if (t != result.statistic_observed) all_equal = false;
    if (detail::oriented(t, side) >= t_obs - tol) ++extreme;
    ++total;
  });
  result.n_resamples = total;
  result.p_value = static_cast<double>(extreme) / static_cast<double>(total);
  result.degenerate = all_equal;
  return result;
}

template <class E>
TestResult conditional_fisher_test_exact(const std::vector<double>& outcomes, const std::vector<E>& observed,
                                         const Population& population, const E& k, const E& k_prime,
                                         Sidedness side = Sidedness::two_sided) {
  return conditional_fisher_test_exact(std::span<const double>(outcomes), std::span<const E>(observed), population, k,
                                       k_prime, side);
}

// ---- global sharp null ------------------------------------------------------

template <class E>
using GlobalStatistic = std::function<double(const Population&, std::span<const E>, std::span<const double>)>;

template <class E>
using ExposureFunction = std::function<std::vector<E>(const Population&, const Assignment&)>;

/// Sum over strata of (largest - smallest) mean outcome across the
/// exposure cells realized in that stratum.
template <class E>
double stratified_range_statistic(const Population& population, std::span<const E> exposures,
                                  std::span<const double> outcomes) {
  double total = 0.0;
  for (const auto& [a, units] : population.strata()) {
    std::map<E, std::pair<double, std::size_t>> cells;
    for (std::size_t i : units) {
      auto& cell = cells[exposures[i]];
      cell.first += outcomes[i];
      ++cell.second;
    }
    if (cells.empty()) continue;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& [h, cell] : cells) {
      const double m = cell.first / static_cast<double>(cell.second);
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
    total += hi - lo;
  }
  return total;
}

inline std::vector<ExposureQuad> quad_exposures(const Population& population, const Assignment& assignment) {
  return exposure_quadruple(population, assignment);
}

/// Fisher randomization test of the global sharp null: outcomes are held
/// fixed and C' is redrawn from the design around `initial`.
template <class E = ExposureQuad>
TestResult global_fisher_test(std::span<const double> outcomes, const Assignment& observed,
                              const Population& population, const Assignment& initial, std::size_t resamples,
                              Rng& rng, const GlobalStatistic<E>& statistic = stratified_range_statistic<E>,
                              const ExposureFunction<E>& exposures_of = quad_exposures) {
  detail::require(outcomes.size() == population.size(), "global_fisher_test: outcome length mismatch");
  detail::require(resamples >= 1, "global_fisher_test needs at least one resample");
  require_valid(observed, population);
  require_valid(initial, population);
  const auto spec = attribute_stabilizer(population);
  TestResult result;
  result.n_resamples = resamples;
  {
    const auto h = exposures_of(population, observed);
    result.statistic_observed = statistic(population, std::span<const E>(h), outcomes);
  }
  const double tol = detail::tie_tolerance(result.statistic_observed);
  std::size_t extreme = 0;
  bool all_equal = true;
  for (std::size_t r = 0; r < resamples; ++r) {
    const Assignment draw = randomize(initial, population, spec, rng);
    const auto h = exposures_of(population, draw);
    const double t = statistic(population, std::span<const E>(h), outcomes);
    if (t != result.statistic_observed) all_equal = false;
    if (t >= result.statistic_observed - tol) ++extreme;
  }
  result.p_value = static_cast<double>(1 + extreme) / static_cast<double>(resamples + 1);
  result.degenerate = all_equal;
  return result;
}

/// Exact global p-value by enumerating every pi in the attribute stabilizer.
template <class E = ExposureQuad>
TestResult global_fisher_test_exact(std::span<const double> outcomes, const Assignment& observed,
                                    const Population& population, const Assignment& initial,
                                    const GlobalStatistic<E>& statistic = stratified_range_statistic<E>,
                                    const ExposureFunction<E>& exposures_of = quad_exposures) {
  detail::require(outcomes.size() == population.size(), "global_fisher_test_exact: outcome length mismatch");
  require_valid(observed, population);
  require_valid(initial, population);
  const auto spec = attribute_stabilizer(population);
  if (log_stabilizer_order(spec) > std::log(detail::kMaxEnumeration)) {
    throw InvalidInput("attribute stabilizer too large to enumerate");
  }
  TestResult result;
  result.exhaustive = true;
  {
    const auto h = exposures_of(population, observed);
    result.statistic_observed = statistic(population, std::span<const E>(h), outcomes);
  }
  const double tol = detail::tie_tolerance(result.statistic_observed);
  std::size_t extreme = 0, total = 0;
  bool all_equal = true;
  for_each_stabilizer_element(spec, [&](const Permutation& perm) {
    const auto h = exposures_of(population, apply_permutation(perm, initial));
    const double t = statistic(population, std::span<const E>(h), outcomes);
    if (t != result.statistic_observed) all_equal = false;
    if (t >= result.statistic_observed - tol) ++extreme;
    ++total;
  });
  result.n_resamples = total;
  result.p_value = static_cast<double>(extreme) / static_cast<double>(total);
  result.degenerate = all_equal;
  return result;
}

}  // namespace grouprand
