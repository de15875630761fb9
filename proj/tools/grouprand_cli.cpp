#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "grouprand/grouprand.hpp"
#include "grouprand/io.hpp"

namespace fs = std::filesystem;
using namespace grouprand;

namespace {

struct Common {
  std::string population;
  std::vector<int> levels{0, 1};
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

io::PopulationFile load_population(const Common& c) { return io::read_population(c.population, c.levels); }

// Initial assignment from --init, or from the population file's group0/treatment0 columns.
Assignment load_initial(const std::string& init, const io::PopulationFile& pf) {
  if (!init.empty()) return io::read_assignment(init);
  if (pf.initial) return *pf.initial;
  throw InvalidInput("no initial assignment: pass --init or add group0/treatment0 columns to the population file");
}

std::string focal_counts_text(const TestResult& r) {
  std::string out;
  for (const auto& [a, c] : r.focal_counts) {
    if (!out.empty()) out += ';';
    out += std::to_string(a) + ':' + std::to_string(c[0]) + ':' + std::to_string(c[1]);
  }
  return out;
}

void print_test(std::ostream& os, const std::string& name, const TestResult& r) {
  os << "test,statistic,p_value,resamples,exhaustive,degenerate,focal_counts\n";
  os << name << ',' << num(r.statistic_observed) << ',' << num(r.p_value) << ',' << r.n_resamples << ','
     << (r.exhaustive ? 1 : 0) << ',' << (r.degenerate ? 1 : 0) << ',' << focal_counts_text(r) << '\n';
}

void add_population(CLI::App* cmd, Common& c) {
  cmd->add_option("--population", c.population, "population CSV (unit,attribute[,treatment0,group0])")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--levels", c.levels, "attribute levels")->delimiter(',');
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomization design and inference for group-formation experiments"};
  app.require_subcommand(1);

  // randomize
  Common rc;
  std::string r_init, r_out;
  std::uint64_t r_seed = 1;
  std::size_t r_draws = 1;
  bool r_exposure = false;
  auto* randomize_cmd = app.add_subcommand("randomize", "draw assignments pi . C0 with pi uniform on Stab(A)");
  add_population(randomize_cmd, rc);
  randomize_cmd->add_option("--init", r_init, "initial assignment CSV (unit,group,treatment)");
  randomize_cmd->add_option("--seed", r_seed);
  randomize_cmd->add_option("--draws", r_draws)->check(CLI::PositiveNumber);
  randomize_cmd->add_option("--out", r_out, "output CSV (default stdout)");
  randomize_cmd->add_flag("--exposure", r_exposure, "append the exposure quadruple of each unit");

  // analyze
  Common ac;
  std::string a_assign, a_outcomes, a_k, a_kp, a_out;
  double a_alpha = 0.05;
  auto* analyze_cmd = app.add_subcommand("analyze", "stratified difference in means with a Wald interval");
  add_population(analyze_cmd, ac);
  analyze_cmd->add_option("--assignment", a_assign)->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--outcomes", a_outcomes)->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--k", a_k, "exposure a:w:aw:own")->required();
  analyze_cmd->add_option("--kprime", a_kp)->required();
  analyze_cmd->add_option("--alpha", a_alpha);
  analyze_cmd->add_option("--out", a_out);

  // test
  auto* test_cmd = app.add_subcommand("test", "Fisher randomization tests");
  test_cmd->require_subcommand(1);
  Common tc;
  std::string t_assign, t_outcomes, t_k, t_kp, t_init, t_sided = "two", t_out;
  std::size_t t_resamples = 1000;
  std::uint64_t t_seed = 1;
  bool t_exact = false;
  auto* pairwise_cmd = test_cmd->add_subcommand("pairwise", "conditional test of Y(k) = Y(k') on the focal set");
  auto* global_cmd = test_cmd->add_subcommand("global", "test of the global sharp null");
  for (auto* cmd : {pairwise_cmd, global_cmd}) {
    add_population(cmd, tc);
    cmd->add_option("--assignment", t_assign)->required()->check(CLI::ExistingFile);
    cmd->add_option("--outcomes", t_outcomes)->required()->check(CLI::ExistingFile);
    cmd->add_option("--resamples", t_resamples)->check(CLI::PositiveNumber);
    cmd->add_option("--seed", t_seed);
    cmd->add_flag("--exact", t_exact, "enumerate the stabilizer instead of sampling");
    cmd->add_option("--out", t_out);
  }
  pairwise_cmd->add_option("--k", t_k)->required();
  pairwise_cmd->add_option("--kprime", t_kp)->required();
  pairwise_cmd->add_option("--sided", t_sided, "two | greater | less");
  global_cmd->add_option("--init", t_init, "initial assignment C0 the design permutes");

  // design
  Common dc;
  std::size_t d_m = 0;
  std::string d_k = "1:1:1:1", d_kp = "2:1:1:0", d_out;
  double d_eta = 1.2;
  std::optional<std::size_t> d_budget;
  std::uint64_t d_seed = 1;
  auto* design_cmd = app.add_subcommand("design", "optimal initial assignment from the LP relaxation");
  add_population(design_cmd, dc);
  design_cmd->add_option("--m", d_m, "group size")->required()->check(CLI::Range(2, 1000));
  design_cmd->add_option("--k", d_k);
  design_cmd->add_option("--kprime", d_kp);
  design_cmd->add_option("--eta", d_eta);
  design_cmd->add_option("--treated-budget", d_budget);
  design_cmd->add_option("--seed", d_seed);
  design_cmd->add_option("--out", d_out, "initial assignment CSV; the LP summary goes to <stem>.json")->required();

  // simulate
  std::string s_config, s_dir = "results";
  auto* simulate_cmd = app.add_subcommand("simulate", "power study over group sizes, strategies and effects");
  simulate_cmd->add_option("--config", s_config, "JSON config")->check(CLI::ExistingFile);
  simulate_cmd->add_option("--out-dir", s_dir);

  CLI11_PARSE(app, argc, argv);

  try {
    if (randomize_cmd->parsed()) {
      const auto pf = load_population(rc);
      const Assignment c0 = load_initial(r_init, pf);
      require_valid(c0, pf.population);
      Rng rng(r_seed);
      const auto spec = attribute_stabilizer(pf.population);
      std::ofstream file;
      std::ostream* os = &std::cout;
      if (!r_out.empty()) {
        file = open_out(r_out);
        os = &file;
      }
      io::write_draw_header(*os, r_exposure);
      for (std::size_t d = 0; d < r_draws; ++d) {
        const auto c = randomize(c0, pf.population, spec, rng);
        if (r_exposure) {
          const auto h = exposure_quadruple(pf.population, c);
          io::write_draw(*os, d, c, &h);
        } else {
          io::write_draw(*os, d, c);
        }
      }
      if (!*os) throw Error("write failed");
    } else if (analyze_cmd->parsed()) {
      const auto pf = load_population(ac);
      const auto c = io::read_assignment(a_assign);
      require_valid(c, pf.population);
      const auto y = io::read_outcomes(a_outcomes);
      const auto h = exposure_quadruple(pf.population, c);
      const auto k = parse_quad(a_k), kp = parse_quad(a_kp);
      const auto e = estimate_contrast(y, h, pf.population, k, kp, a_alpha);
      for (const auto& w : e.warnings) std::cerr << "warning: " << w << '\n';
      std::ofstream file;
      std::ostream* os = &std::cout;
      if (!a_out.empty()) {
        file = open_out(a_out);
        os = &file;
      }
      *os << "scope,stratum,n_k,n_kprime,included,estimate,variance,ci_low,ci_high,alpha\n";
      for (const auto& s : e.strata) {
        *os << "stratum," << s.stratum << ',' << s.n_k << ',' << s.n_k_prime << ',' << (s.included ? 1 : 0) << ','
            << num(s.estimate) << ',' << num(s.variance) << ",,," << num(a_alpha) << '\n';
      }
      std::size_t nk = 0, nkp = 0;
      for (const auto& s : e.strata) nk += s.n_k, nkp += s.n_k_prime;
      *os << "pooled,," << nk << ',' << nkp << ",1," << num(e.estimate) << ',' << num(e.variance) << ','
          << num(e.ci_low) << ',' << num(e.ci_high) << ',' << num(a_alpha) << '\n';
    } else if (test_cmd->parsed()) {
      const auto pf = load_population(tc);
      const auto c = io::read_assignment(t_assign);
      require_valid(c, pf.population);
      const auto y = io::read_outcomes(t_outcomes);
      Rng rng(t_seed);
      std::ofstream file;
      std::ostream* os = &std::cout;
      if (!t_out.empty()) {
        file = open_out(t_out);
        os = &file;
      }
      if (pairwise_cmd->parsed()) {
        const auto h = exposure_quadruple(pf.population, c);
        const auto k = parse_quad(t_k), kp = parse_quad(t_kp);
        const auto side = io::parse_sidedness(t_sided);
        const auto r = t_exact ? conditional_fisher_test_exact(y, h, pf.population, k, kp, side)
                               : conditional_fisher_test(y, h, pf.population, k, kp, t_resamples, rng, side);
        print_test(*os, "pairwise", r);
      } else {
        const Assignment c0 = t_init.empty() ? (pf.initial ? *pf.initial : c) : io::read_assignment(t_init);
        const std::span<const double> ys(y);
        const auto r = t_exact ? global_fisher_test_exact(ys, c, pf.population, c0)
                               : global_fisher_test(ys, c, pf.population, c0, t_resamples, rng);
        print_test(*os, "global", r);
      }
    } else if (design_cmd->parsed()) {
      const auto pf = load_population(dc);
      Rng rng(d_seed);
      const auto k = parse_quad(d_k), kp = parse_quad(d_kp);
      const auto d = optimal_design(pf.population, d_m, k, kp, d_eta, rng, d_budget);
      {
        auto out = open_out(d_out);
        io::write_assignment(out, d.realized.assignment);
        if (!out) throw Error("cannot write " + d_out);
      }
      nlohmann::json summary;
      summary["status"] = lp::to_string(d.solution.status);
      summary["lp_objective"] = d.solution.objective;
      summary["integer_objective"] = d.realized.integer_objective;
      summary["floor_feasible"] = d.realized.floor_feasible;
      summary["repair_removed_groups"] = d.realized.repair_removed;
      summary["pivots"] = d.solution.pivots;
      summary["complementary_slackness"] = d.solution.complementary_slackness;
      summary["group_size"] = d_m;
      summary["n_units"] = pf.population.size();
      summary["eta"] = d_eta;
      summary["k"] = to_string(k);
      summary["k_prime"] = to_string(kp);
      summary["composition_groups"] = d.realized.composition_groups;
      summary["filler_groups"] = d.realized.filler_groups;
      if (d_budget) summary["treated_budget"] = *d_budget;
      nlohmann::json comps = nlohmann::json::array();
      for (std::size_t j = 0; j < d.program.compositions.size(); ++j) {
        const auto& g = d.program.compositions[j];
        std::string members;
        for (const auto& [a, w] : g.members) members += "(" + std::to_string(a) + "," + std::to_string(w) + ")";
        comps.push_back({{"members", members},
                         {"m_k", g.target_count(0)},
                         {"m_kprime", g.target_count(1)},
                         {"lp_value", d.solution.values[j]},
                         {"groups", d.realized.group_counts[j]}});
      }
      summary["compositions"] = comps;
      nlohmann::json ratio = nlohmann::json::object();
      for (const auto& [a, r] : d.realized.balance_ratio) ratio[std::to_string(a)] = r;
      summary["balance_ratio"] = ratio;
      nlohmann::json rows = nlohmann::json::array();
      for (std::size_t i = 0; i < d.program.program.rows.size(); ++i)
        rows.push_back({{"name", d.program.program.rows[i].name}, {"dual", d.solution.duals[i]}});
      summary["rows"] = rows;
      const fs::path sidecar = fs::path(d_out).replace_extension(".json");
      auto out = open_out(sidecar);
      out << summary.dump(2) << '\n';
      std::cerr << "design: LP objective " << num(d.solution.objective) << ", integer objective "
                << num(d.realized.integer_objective) << "; summary in " << sidecar.string() << '\n';
    } else if (simulate_cmd->parsed()) {
      const SimulationConfig config = s_config.empty() ? SimulationConfig{} : io::read_simulation_config(s_config);
      std::vector<std::string> warnings;
      const auto table = run_power_simulation(config, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
      for (const auto& p : emit_report(table, s_dir)) std::cerr << "wrote " << p.string() << '\n';
    }
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
