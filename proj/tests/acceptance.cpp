// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "grouprand/grouprand.hpp"
#include "oracles.hpp"

using namespace grouprand;

namespace {

const ExposureQuad kK{1, 1, 1, 1};
const ExposureQuad kKp{2, 1, 1, 0};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Population half_split(std::size_t n) {
  std::vector<Code> a(n, 0);
  std::fill_n(a.begin(), n / 2, 1);
  return build_population(a);
}

// 1. Count invariance and per-unit marginals under randomize, with a
// negative control that sorts exposures within strata on half the draws.
Outcome scrd_property_suite() {
  const auto start = std::chrono::steady_clock::now();
  const auto pop = half_split(12);
  Rng rng(101);
  const Assignment c0 = random_init(pop, 3, 4, 5, rng);
  const auto spec = attribute_stabilizer(pop);
  const auto expected = exposure_table(pop, exposure_quadruple(pop, c0));
  const std::size_t draws = 100000;
  std::vector<std::vector<ExposureQuad>> samples;
  samples.reserve(draws);
  bool identical = true;
  for (std::size_t d = 0; d < draws; ++d) {
    samples.push_back(exposure_quadruple(pop, randomize(c0, pop, spec, rng)));
    identical = identical && exposure_table(pop, samples.back()) == expected;
  }
  const auto report = verify_scrd(samples, pop, expected, rng);
  double min_p = 1.0;
  for (const auto& m : report.marginals) min_p = std::min(min_p, m.test.p_value);

  for (auto& h : samples) {
    if (uniform_below(rng, 2) == 0) continue;
    for (const auto& [a, units] : pop.strata()) {
      std::vector<ExposureQuad> v;
      for (std::size_t i : units) v.push_back(h[i]);
      std::sort(v.begin(), v.end());
      for (std::size_t r = 0; r < units.size(); ++r) h[units[r]] = v[r];
    }
  }
  const auto biased = verify_scrd(samples, pop, expected, rng);
  double biased_p = 1.0;
  for (const auto& m : biased.marginals) biased_p = std::min(biased_p, m.test.p_value);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  Outcome o;
  o.pass = identical && report.counts_ok() && report.marginals_ok(1e-3) && !biased.marginals_ok(1e-3) && secs < 30;
  double indep_p = report.independence.empty() ? 1.0 : report.independence.front().test.p_value;
  o.detail = fmt("tables identical=%d, min marginal p=%.4g, biased min p=%.3g, pair independence p=%.3g, %.1fs",
                 identical, min_p, biased_p, indep_p, secs);
  return o;
}

// 2. Conditional resampling against the enumerated S_AU orbit, and the
// exhaustive conditional p-value against a brute-force count.
Outcome conditional_oracle() {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<Code> a{0, 0, 0, 1, 1, 1};
  const auto pop = build_population(a);
  const Assignment c{{1, 2, 1, 2, 1, 2}, {1, 0, 1, 0, 0, 1}, 3, 2};
  const auto h = exposure_quadruple(pop, c);
  const ExposureQuad k = h[0], kp = h[1];
  const auto u = focal_set(h, std::set<ExposureQuad>{k, kp});

  std::vector<int> labels(6);
  for (std::size_t i = 0; i < 6; ++i) labels[i] = 2 * a[i] + u[i];
  const auto group = oracle::brute_stabilizer(labels);
  std::map<std::vector<ExposureQuad>, double> exact;
  for (const auto& f : group) exact[oracle::act(f, h)] += 1.0 / static_cast<double>(group.size());

  Rng rng(202);
  const std::size_t draws = 100000;
  std::map<std::vector<ExposureQuad>, double> freq;
  for (std::size_t d = 0; d < draws; ++d) freq[conditional_resample(h, u, pop, rng)] += 1.0 / draws;
  double tv = 0.0;
  bool support_ok = true;
  for (const auto& [x, p] : freq) support_ok = support_ok && exact.contains(x);
  for (const auto& [x, p] : exact) tv += std::abs(p - (freq.contains(x) ? freq[x] : 0.0));
  tv /= 2;

  // p-values for several outcome vectors.
  bool p_equal = true;
  int checked = 0;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> y(6);
    for (auto& v : y) v = standard_normal(rng);
    const auto t_of = [&](const std::vector<ExposureQuad>& e) {
      double sk = 0, skp = 0;
      int nk = 0, nkp = 0;
      for (std::size_t i = 0; i < 6; ++i) {
        if (e[i] == k) sk += y[i], ++nk;
        if (e[i] == kp) skp += y[i], ++nkp;
      }
      return std::abs(sk / nk - skp / nkp);
    };
    const double t_obs = t_of(h);
    std::size_t hits = 0;
    for (const auto& f : group) hits += t_of(oracle::act(f, h)) >= t_obs - 1e-9 * std::max(1.0, t_obs);
    const double brute = static_cast<double>(hits) / static_cast<double>(group.size());
    const auto r = conditional_fisher_test_exact(y, h, pop, k, kp);
    p_equal = p_equal && r.p_value == brute;
    ++checked;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Outcome o;
  o.pass = support_ok && tv < 0.01 && p_equal && secs < 10;
  o.detail = fmt("orbit size %zu, TV=%.4f, exact p equal on %d/%d outcome draws, %.1fs", exact.size(), tv,
                 p_equal ? checked : 0, checked, secs);
  return o;
}

// 3. Null rejection rate of the conditional test at tau = 0.
Outcome null_validity() {
  SimulationConfig c;
  c.group_sizes = {4};
  c.taus = {0.0};
  c.strategies = {Strategy::parse("optimal")};
  c.replications = 2000;
  c.resamples = 500;
  const auto t = run_power_simulation(c);
  const double rate = t.rows.at(0).power;
  const double bound = 0.05 + 3 * std::sqrt(0.05 * 0.95 / 2000);
  Outcome o;
  o.pass = rate <= bound && !t.rows[0].degenerate;
  o.detail = fmt("rejection rate %.4f <= %.4f (focal k=%.0f, k'=%.0f)", rate, bound, t.rows[0].mean_focal_k,
                 t.rows[0].mean_focal_k_prime);
  return o;
}

// 4. Power of the optimal design against the baselines.
Outcome power_reproduction() {
  SimulationConfig c;
  c.group_sizes = {3, 6};
  c.taus = {1.0};
  c.replications = 500;
  c.resamples = 500;
  std::vector<std::string> warnings;
  const auto t = run_power_simulation(c, &warnings);
  const auto power = [&](std::size_t m, const std::string& s) { return t.find(m, s, 1.0)->power; };
  const double opt6 = power(6, "optimal"), rnd6 = power(6, "random"), rej6 = power(6, "rejection(10)");
  bool m3_ok = true;
  std::string m3;
  for (const auto& r : t.rows) {
    if (r.group_size != 3) continue;
    m3 += fmt(" %s=%.3f%s", r.strategy.c_str(), r.power, r.degenerate ? "(degenerate)" : "");
    if (r.strategy != "optimal") m3_ok = m3_ok && power(3, "optimal") >= r.power;
  }
  Outcome o;
  o.pass = opt6 >= 0.90 && rnd6 <= 0.45 && rej6 <= 0.45 && m3_ok;
  o.detail = fmt("m=6: optimal=%.3f random=%.3f rejection(10)=%.3f rejection(1000)=%.3f; m=3:", opt6, rnd6, rej6,
                 power(6, "rejection(1000)")) +
             m3;
  return o;
}

// 5. Neyman estimator over repeated randomizations of a fixed design with
// a fixed heterogeneous potential-outcome table.
Outcome estimation_suite() {
  const auto pop = half_split(300);
  Rng rng(505);
  const auto design = optimal_design(pop, 4, kK, kKp, 1.2, rng);
  const auto& c0 = design.realized.assignment;
  PotentialOutcomes table = draw_potential_outcomes(300, 0.0, kKp, rng);
  for (std::size_t i = 0; i < 300; ++i) {
    table.baseline[i] += pop.attribute(i) == 1 ? 0.5 : 0.0;
    table.effect[i] = 1.0 + 0.5 * standard_normal(rng);
  }
  const double truth = table.contrast(kK, kKp);
  const auto spec = attribute_stabilizer(pop);
  const std::size_t draws = 10000;
  std::vector<double> est(draws);
  std::size_t covered = 0;
  for (std::size_t d = 0; d < draws; ++d) {
    const auto h = exposure_quadruple(pop, randomize(c0, pop, spec, rng));
    const auto y = table.observe(h);
    const auto e = estimate_contrast(y, h, pop, kK, kKp, 0.05);
    est[d] = e.estimate;
    covered += e.ci_low <= truth && truth <= e.ci_high;
  }
  const double mean = stats::mean(est);
  const double sd = std::sqrt(stats::sample_variance(est));
  const double mc_se = sd / std::sqrt(static_cast<double>(draws));
  std::vector<double> z(draws);
  for (std::size_t d = 0; d < draws; ++d) z[d] = (est[d] - mean) / sd;
  const double ks = stats::ks_distance_normal(z);
  const double coverage = static_cast<double>(covered) / draws;
  Outcome o;
  o.pass = std::abs(mean - truth) <= 3 * mc_se && coverage >= 0.94 && ks < 0.05;
  o.detail = fmt("truth %.4f, mean %.4f (|bias|=%.4f, 3 MC-SE=%.4f), coverage %.4f, KS %.4f", truth, mean,
                 std::abs(mean - truth), 3 * mc_se, coverage, ks);
  return o;
}

// 6. Equivariance of the exposure map under the attribute stabilizer.
Outcome equivariance() {
  Rng rng(606);
  const std::size_t pairs = 1000;
  std::size_t ok = 0;
  for (std::size_t t = 0; t < pairs; ++t) {
    std::vector<Code> a(30);
    for (auto& x : a) x = static_cast<Code>(uniform_below(rng, 2));
    const auto pop = build_population(a);
    const auto c = random_init(pop, 3, 10, uniform_below(rng, 31), rng);
    const auto pi = sample_uniform_stabilizer(attribute_stabilizer(pop), rng);
    ok += exposure_map(pop, apply_permutation(pi, c)) == apply_permutation(pi, exposure_map(pop, c));
  }
  return {ok == pairs, fmt("%zu/%zu pairs equal", ok, pairs)};
}

// 7. LP relaxation against exhaustive integer enumeration.
Outcome lp_oracle() {
  const auto pop = half_split(12);
  const auto comps = enumerate_compositions(3, {0, 1}, {0, 1}, kK, kKp);
  const auto d = build_program(comps, pop, 1.2);
  const auto s = solve_lp(d);
  const auto ilp = oracle::brute_force_design(comps, pop, 1.2);
  Rng rng(707);
  const auto r = round_and_realize(s, d, pop, 3, rng);
  std::vector<double> floor_point(s.values.size());
  double floor_obj = 0;
  for (std::size_t j = 0; j < floor_point.size(); ++j) {
    floor_point[j] = std::floor(s.values[j] + 1e-9);
    floor_obj += floor_point[j] * d.program.objective[j];
  }
  const bool floor_feasible = lp::is_feasible(d.program, floor_point);
  std::vector<double> final_point(r.group_counts.begin(), r.group_counts.end());
  const bool final_feasible = lp::is_feasible(d.program, final_point);
  Outcome o;
  o.pass = s.status == lp::Status::optimal && floor_obj <= ilp.objective + 1e-9 &&
           ilp.objective <= s.objective + 1e-9 && floor_feasible && final_feasible;
  o.detail = fmt("LP %.4f >= ILP %.0f >= floor %.0f (%zu feasible integer points); floor feasible=%d, CS residual %.2g",
                 s.objective, ilp.objective, floor_obj, ilp.feasible_points, floor_feasible,
                 s.complementary_slackness);
  return o;
}

// 8. k-focal and k'-focal units in disjoint attribute strata.
Outcome zero_power() {
  // Group {(1,1),(1,1),(0,0)} gives its two treated members exposure k;
  // group {(0,0),(1,0),(1,1)} gives its untreated attribute-0 member k'.
  std::vector<Code> a;
  Assignment c0;
  c0.group_size = 3;
  for (int g = 0; g < 10; ++g) {
    const bool first = g % 2 == 0;
    const std::vector<MemberType> members = first ? std::vector<MemberType>{{1, 1}, {1, 1}, {0, 0}}
                                                  : std::vector<MemberType>{{0, 0}, {1, 0}, {1, 1}};
    for (const auto& [x, w] : members) {
      a.push_back(x);
      c0.groups.push_back(g + 1);
      c0.treatments.push_back(w);
    }
  }
  c0.n_groups = 10;
  const auto pop = build_population(a);
  Rng rng(808);
  const std::size_t runs = 200;
  std::size_t ok = 0;
  for (std::size_t r = 0; r < runs; ++r) {
    const auto h = exposure_quadruple(pop, randomize(c0, pop, rng));
    std::vector<double> y(pop.size());
    for (auto& v : y) v = standard_normal(rng) + (r % 2 ? 1.0 : 0.0);
    const auto t = conditional_fisher_test(y, h, pop, kK, kKp, 200, rng);
    ok += t.p_value == 1.0 && t.degenerate;
  }
  return {ok == runs, fmt("%zu/%zu runs with p = 1 and the degenerate flag", ok, runs)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 design count invariance and marginals", scrd_property_suite},
      {"2 conditional resampling oracle", conditional_oracle},
      {"3 null validity (tau=0, m=4)", null_validity},
      {"4 power: optimal vs baselines", power_reproduction},
      {"5 Neyman estimation", estimation_suite},
      {"6 exposure equivariance", equivariance},
      {"7 LP/ILP oracle", lp_oracle},
      {"8 zero-power degenerate case", zero_power},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s  %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !o.pass;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
