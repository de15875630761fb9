#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "grouprand/design.hpp"
#include "grouprand/error.hpp"
#include "grouprand/exposure.hpp"
#include "grouprand/inference.hpp"
#include "grouprand/optimal_design.hpp"
#include "grouprand/population.hpp"
#include "grouprand/rng.hpp"

namespace grouprand {

/// Additive-shift potential outcomes: Y_i(h) = baseline_i + effect_i if
/// h == k', otherwise baseline_i.
struct PotentialOutcomes {
  std::vector<double> baseline;
  std::vector<double> effect;
  ExposureQuad k_prime;

  double outcome(std::size_t unit, const ExposureQuad& h) const {
    return h == k_prime ? baseline[unit] + effect[unit] : baseline[unit];
  }

  std::vector<double> observe(std::span<const ExposureQuad> exposures) const {
    std::vector<double> y(exposures.size());
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = outcome(i, exposures[i]);
    return y;
  }

  /// N^{-1} sum_i {Y_i(k) - Y_i(k')}.
  double contrast(const ExposureQuad& k, const ExposureQuad& kp) const {
    double total = 0.0;
    for (std::size_t i = 0; i < baseline.size(); ++i) total += outcome(i, k) - outcome(i, kp);
    return total / static_cast<double>(baseline.size());
  }

  /// N_[a]^{-1} sum_{i: A_i = a} {Y_i(k) - Y_i(k')}.
  double stratum_contrast(const Population& population, Code a, const ExposureQuad& k, const ExposureQuad& kp) const {
    const auto units = population.stratum(a);
    detail::require(!units.empty(), "stratum contrast of an empty stratum");
    double total = 0.0;
    for (std::size_t i : units) total += outcome(i, k) - outcome(i, kp);
    return total / static_cast<double>(units.size());
  }
};

struct GeneratedOutcomes {
  PotentialOutcomes table;
  std::vector<double> observed;
};

/// Draws baseline_i ~ N(0, 1), shifts units exposed to k' by tau.
inline PotentialOutcomes draw_potential_outcomes(std::size_t n_units, double tau, const ExposureQuad& k_prime, Rng& rng) {
  PotentialOutcomes table;
  table.k_prime = k_prime;
  table.baseline.resize(n_units);
  for (auto& m : table.baseline) m = standard_normal(rng);
  table.effect.assign(n_units, tau);
  return table;
}

inline GeneratedOutcomes generate_outcomes(const Population& population, std::span<const ExposureQuad> exposures,
                                           double tau, const ExposureQuad& k_prime, Rng& rng) {
  detail::require(exposures.size() == population.size(), "generate_outcomes: exposure vector length mismatch");
  GeneratedOutcomes out;
  out.table = draw_potential_outcomes(population.size(), tau, k_prime, rng);
  out.observed = out.table.observe(exposures);
  return out;
}

// ---- power study ------------------------------------------------------------

struct Strategy {
  enum class Kind { optimal, rejection, random };
  Kind kind = Kind::optimal;
  std::size_t iterations = 0;

  std::string name() const {
    switch (kind) {
      case Kind::optimal: return "optimal";
      case Kind::random: return "random";
      case Kind::rejection: return "rejection(" + std::to_string(iterations) + ")";
    }
    return "unknown";
  }

  std::uint64_t stream_id() const { return static_cast<std::uint64_t>(kind) * 1000003ULL + iterations; }

  /// "optimal", "random", "rejection:M" or "rejection(M)".
  static Strategy parse(const std::string& text) {
    if (text == "optimal") return {Kind::optimal, 0};
    if (text == "random") return {Kind::random, 0};
    const std::string prefix = "rejection";
    if (text.rfind(prefix, 0) == 0 && text.size() > prefix.size() + 1) {
      std::string digits = text.substr(prefix.size() + 1);
      if (!digits.empty() && digits.back() == ')') digits.pop_back();
      try {
        std::size_t used = 0;
        const long long m = std::stoll(digits, &used);
        if (used == digits.size() && m >= 1) return {Kind::rejection, static_cast<std::size_t>(m)};
      } catch (const std::exception&) {
      }
    }
    throw InvalidInput("unknown strategy '" + text + "'");
  }
};

struct SimulationConfig {
  std::size_t n_units = 300;
  /// Units with attribute 1 (the first `n_attribute_one` indices); the rest have 0.
  std::size_t n_attribute_one = 150;
  std::vector<std::size_t> group_sizes{3, 4, 5, 6};
  std::vector<double> taus{0.0, 0.25, 0.5, 0.75, 1.0};
  ExposureQuad k{1, 1, 1, 1};
  ExposureQuad k_prime{2, 1, 1, 0};
  std::size_t replications = 500;
  std::size_t resamples = 500;
  double alpha = 0.05;
  double eta = 1.2;
  /// Balance multiplier for the rejection-sampling baselines; defaults to eta.
  std::optional<double> rejection_eta;
  /// Treated units for the random / rejection baselines; defaults to the
  /// treated count of the optimal design at the same m.
  std::optional<std::size_t> treated_count;
  std::optional<std::size_t> treated_budget;
  std::vector<Strategy> strategies{{Strategy::Kind::optimal, 0},
                                   {Strategy::Kind::rejection, 10},
                                   {Strategy::Kind::rejection, 1000},
                                   {Strategy::Kind::random, 0}};
  Sidedness sidedness = Sidedness::two_sided;
  /// Draw fresh baselines for every replication (otherwise once per cell).
  bool redraw_outcomes = true;
  std::uint64_t seed = 20240101;

  void validate() const {
    detail::require(n_units >= 2, "n_units must be at least 2");
    detail::require(n_attribute_one <= n_units, "n_attribute_one exceeds n_units");
    detail::require(!group_sizes.empty(), "no group sizes");
    for (std::size_t m : group_sizes) {
      detail::require(m >= 2 && n_units % m == 0,
                      "group size " + std::to_string(m) + " does not divide N = " + std::to_string(n_units));
    }
    detail::require(!taus.empty(), "empty tau grid");
    for (double t : taus) detail::require(std::isfinite(t), "tau grid must be finite");
    detail::require(replications >= 1, "replications must be at least 1");
    detail::require(resamples >= 1, "resamples must be at least 1");
    detail::require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    detail::require(eta > 1.0, "eta must exceed 1");
    detail::require(!strategies.empty(), "no strategies");
  }

  Population population() const {
    std::vector<Code> a(n_units, 0);
    std::fill_n(a.begin(), n_attribute_one, 1);
    return build_population(std::move(a));
  }
};

struct PowerRow {
  std::size_t group_size = 0;
  std::string strategy;
  double tau = 0.0;
  double power = 0.0;
  double mc_se = 0.0;
  double mean_focal_k = 0.0;
  double mean_focal_k_prime = 0.0;
  std::size_t replications = 0;
  /// The design has no focal units for k or k', so no test can be formed.
  bool degenerate = false;
};

struct PowerTable {
  std::vector<PowerRow> rows;

  const PowerRow* find(std::size_t m, const std::string& strategy, double tau) const {
    for (const auto& r : rows)
      if (r.group_size == m && r.strategy == strategy && r.tau == tau) return &r;
    return nullptr;
  }
};

/// Initial assignment for one (m, strategy) cell.
struct CellDesign {
  Assignment initial;
  std::vector<std::string> warnings;
};

inline CellDesign build_initial(const SimulationConfig& config, const Population& population, std::size_t m,
                                const Strategy& strategy, const Assignment& optimal_c0) {
  CellDesign cell;
  if (strategy.kind == Strategy::Kind::optimal) {
    cell.initial = optimal_c0;
    return cell;
  }
  std::size_t treated = 0;
  if (config.treated_count) {
    treated = *config.treated_count;
  } else {
    for (Code w : optimal_c0.treatments) treated += w != 0 ? 1 : 0;
  }
  Rng rng = make_stream(config.seed, {m, strategy.stream_id(), 0xC0ULL});
  const std::size_t k_groups = population.size() / m;
  if (strategy.kind == Strategy::Kind::random) {
    cell.initial = random_init(population, m, k_groups, treated, rng);
  } else {
    auto r = rejection_sampling_init(population, m, k_groups, treated, strategy.iterations,
                                     config.rejection_eta.value_or(config.eta), config.k, config.k_prime, rng);
    cell.initial = std::move(r.assignment);
    cell.warnings = std::move(r.warnings);
  }
  return cell;
}

inline Assignment optimal_initial(const SimulationConfig& config, const Population& population, std::size_t m) {
  Rng rng = make_stream(config.seed, {m, Strategy{}.stream_id(), 0xD5ULL});
  return optimal_design(population, m, config.k, config.k_prime, config.eta, rng, config.treated_budget)
      .realized.assignment;
}

/// Rejection rate of the conditional test, for each (m, strategy, tau),
/// over `replications` draws of the design around that cell's C0. Each
/// replication uses the stream (seed, m, strategy, tau index, replication).
inline PowerTable run_power_simulation(const SimulationConfig& config, std::vector<std::string>* warnings = nullptr) {
  config.validate();
  const Population population = config.population();
  const auto spec = attribute_stabilizer(population);
  PowerTable table;
  for (std::size_t m : config.group_sizes) {
    const Assignment optimal_c0 = optimal_initial(config, population, m);
    for (const auto& strategy : config.strategies) {
      const CellDesign cell = build_initial(config, population, m, strategy, optimal_c0);
      if (warnings) {
        for (const auto& w : cell.warnings) warnings->push_back("m=" + std::to_string(m) + " " + strategy.name() + ": " + w);
      }
      const auto h0 = exposure_quadruple(population, cell.initial);
      const auto counts = target_counts(population, std::span<const ExposureQuad>(h0), config.k, config.k_prime);
      std::size_t n_k = 0, n_kp = 0;
      for (const auto& [a, c] : counts) {
        n_k += c[0];
        n_kp += c[1];
      }
      for (std::size_t t = 0; t < config.taus.size(); ++t) {
        PowerRow row;
        row.group_size = m;
        row.strategy = strategy.name();
        row.tau = config.taus[t];
        row.replications = config.replications;
        row.mean_focal_k = static_cast<double>(n_k);
        row.mean_focal_k_prime = static_cast<double>(n_kp);
        if (n_k == 0 || n_kp == 0) {
          row.degenerate = true;
          table.rows.push_back(row);
          continue;
        }
        std::optional<PotentialOutcomes> fixed;
        if (!config.redraw_outcomes) {
          Rng rng = make_stream(config.seed, {m, strategy.stream_id(), t, 0xF1ULL});
          fixed = draw_potential_outcomes(population.size(), row.tau, config.k_prime, rng);
        }
        std::size_t rejections = 0;
        for (std::size_t r = 0; r < config.replications; ++r) {
          Rng rng = make_stream(config.seed, {m, strategy.stream_id(), t, r});
          const Assignment c = randomize(cell.initial, population, spec, rng);
          const auto h = exposure_quadruple(population, c);
          const std::vector<double> y =
              fixed ? fixed->observe(h) : generate_outcomes(population, h, row.tau, config.k_prime, rng).observed;
          const auto result =
              conditional_fisher_test(y, h, population, config.k, config.k_prime, config.resamples, rng, config.sidedness);
          if (result.p_value <= config.alpha) ++rejections;
        }
        row.power = static_cast<double>(rejections) / static_cast<double>(config.replications);
        row.mc_se = std::sqrt(row.power * (1.0 - row.power) / static_cast<double>(config.replications));
        table.rows.push_back(row);
      }
    }
  }
  return table;
}

}  // namespace grouprand
