#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "grouprand/io.hpp"
#include "grouprand/report.hpp"
#include "grouprand/simulation.hpp"

using namespace grouprand;

namespace {

const ExposureQuad kK{1, 1, 1, 1};
const ExposureQuad kKp{2, 1, 1, 0};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SimulationConfig small_config() {
  SimulationConfig c;
  c.n_units = 36;
  c.n_attribute_one = 18;
  c.group_sizes = {3};
  c.taus = {0.0, 1.0};
  c.replications = 20;
  c.resamples = 49;
  c.strategies = {Strategy::parse("optimal"), Strategy::parse("rejection:5"), Strategy::parse("random")};
  return c;
}

}  // namespace

TEST(Outcomes, TauZeroIsBaseline) {
  const auto pop = build_population({0, 1, 0, 1});
  const std::vector<ExposureQuad> h{kK, kKp, kKp, ExposureQuad{}};
  Rng rng(1);
  const auto g = generate_outcomes(pop, h, 0.0, kKp, rng);
  EXPECT_EQ(g.observed, g.table.baseline);
}

TEST(Outcomes, ShiftOnKPrimeOnly) {
  const auto pop = build_population({0, 1, 0, 1});
  const std::vector<ExposureQuad> h{kK, kKp, kKp, ExposureQuad{}};
  Rng rng(1);
  const auto g = generate_outcomes(pop, h, 1.0, kKp, rng);
  EXPECT_EQ(g.observed[0], g.table.baseline[0]);
  EXPECT_EQ(g.observed[1], g.table.baseline[1] + 1.0);
  EXPECT_EQ(g.observed[2], g.table.baseline[2] + 1.0);
  EXPECT_EQ(g.observed[3], g.table.baseline[3]);
}

TEST(Outcomes, FinitePopulationContrastIsMinusTau) {
  const auto pop = build_population({0, 1, 0, 1, 1});
  Rng rng(2);
  for (double tau : {0.0, 0.5, 1.0, -2.0}) {
    const auto t = draw_potential_outcomes(5, tau, kKp, rng);
    EXPECT_NEAR(t.contrast(kK, kKp), -tau, 1e-12);
    EXPECT_NEAR(t.stratum_contrast(pop, 1, kK, kKp), -tau, 1e-12);
  }
}

TEST(Strategy, ParseAndName) {
  EXPECT_EQ(Strategy::parse("rejection:10").name(), "rejection(10)");
  EXPECT_EQ(Strategy::parse("rejection(1000)").iterations, 1000u);
  EXPECT_EQ(Strategy::parse("optimal").name(), "optimal");
  EXPECT_THROW(Strategy::parse("rejection:0"), InvalidInput);
  EXPECT_THROW(Strategy::parse("greedy"), InvalidInput);
}

TEST(Config, Validation) {
  SimulationConfig c;
  EXPECT_NO_THROW(c.validate());
  c.group_sizes = {7};
  EXPECT_THROW(c.validate(), InvalidInput);
  c = SimulationConfig{};
  c.replications = 0;
  EXPECT_THROW(c.validate(), InvalidInput);
}

TEST(Config, ParsesJson) {
  const auto j = nlohmann::json::parse(R"({"n_units": 60, "group_sizes": [3, 6], "taus": [0, 0.5],
      "strategies": ["optimal", "rejection:10"], "k": "1:1:1:1", "k_prime": "2:1:1:0", "seed": 7,
      "sidedness": "greater"})");
  const auto c = io::parse_simulation_config(j);
  EXPECT_EQ(c.n_units, 60u);
  EXPECT_EQ(c.n_attribute_one, 30u);
  EXPECT_EQ(c.group_sizes, (std::vector<std::size_t>{3, 6}));
  EXPECT_EQ(c.strategies.size(), 2u);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.sidedness, Sidedness::greater);
  EXPECT_THROW(io::parse_simulation_config(nlohmann::json::parse(R"({"bogus": 1})")), InvalidInput);
  EXPECT_THROW(io::parse_simulation_config(nlohmann::json::parse(R"({"n_units": "x"})")), InvalidInput);
}

TEST(PowerSimulation, DeterministicAndWellFormed) {
  const auto c = small_config();
  const auto a = run_power_simulation(c);
  const auto b = run_power_simulation(c);
  ASSERT_EQ(a.rows.size(), 6u);
  std::ostringstream sa, sb;
  write_power_csv(a, sa);
  write_power_csv(b, sb);
  EXPECT_EQ(sa.str(), sb.str());
  for (const auto& r : a.rows) {
    EXPECT_GE(r.power, 0.0);
    EXPECT_LE(r.power, 1.0);
    EXPECT_NEAR(r.mc_se, std::sqrt(r.power * (1 - r.power) / r.replications), 1e-12);
  }
  ASSERT_NE(a.find(3, "optimal", 1.0), nullptr);
  EXPECT_GT(a.find(3, "optimal", 1.0)->mean_focal_k, 0.0);
}

TEST(PowerSimulation, DegenerateCellIsRecordedNotAborted) {
  auto c = small_config();
  c.strategies = {Strategy::parse("random")};
  c.treated_count = 0;  // nobody treated: k never occurs
  std::vector<std::string> warnings;
  const auto t = run_power_simulation(c, &warnings);
  for (const auto& r : t.rows) {
    EXPECT_TRUE(r.degenerate);
    EXPECT_EQ(r.power, 0.0);
  }
}

TEST(Report, CsvRowsAndSvgFiles) {
  PowerTable t;
  t.rows.push_back({3, "optimal", 0.0, 0.05, 0.01, 10, 11, 100, false});
  t.rows.push_back({3, "random", 0.0, 0.04, 0.01, 1, 2, 100, false});
  std::ostringstream os;
  write_power_csv(t, os);
  std::istringstream in(os.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  EXPECT_EQ(lines, 3);

  const auto dir = std::filesystem::temp_directory_path() / "grouprand_report_test";
  std::filesystem::remove_all(dir);
  const auto files = emit_report(t, dir);
  ASSERT_EQ(files.size(), 2u);
  std::size_t svgs = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) svgs += e.path().extension() == ".svg";
  EXPECT_EQ(svgs, 1u);
  EXPECT_TRUE(std::filesystem::exists(dir / "power_m3.svg"));
  const auto first_csv = slurp(dir / "power.csv");
  const auto first_svg = slurp(dir / "power_m3.svg");
  emit_report(t, dir);
  EXPECT_EQ(slurp(dir / "power.csv"), first_csv);
  EXPECT_EQ(slurp(dir / "power_m3.svg"), first_svg);
  std::filesystem::remove_all(dir);
  EXPECT_THROW(emit_report(PowerTable{}, dir), InvalidInput);
}

TEST(Report, UnwritablePathThrows) {
  PowerTable t;
  t.rows.push_back({3, "optimal", 0.0, 0.05, 0.01, 10, 11, 100, false});
  EXPECT_THROW(emit_report(t, "/proc/grouprand_no_such_dir"), Error);
}

TEST(Io, PopulationAndAssignmentRoundTrip) {
  const auto pop = build_population({1, 0, 1, 0, 0, 1});
  const Assignment c{{1, 1, 2, 2, 3, 3}, {1, 0, 0, 1, 0, 0}, 2, 3};
  std::stringstream ss;
  io::write_population(ss, pop, &c);
  const auto f = io::read_population(io::read_csv(ss));
  EXPECT_EQ(std::vector<Code>(f.population.attributes().begin(), f.population.attributes().end()),
            (std::vector<Code>{1, 0, 1, 0, 0, 1}));
  ASSERT_TRUE(f.initial.has_value());
  EXPECT_EQ(f.initial->groups, c.groups);
  EXPECT_EQ(f.initial->treatments, c.treatments);
  EXPECT_EQ(f.initial->group_size, 2u);
  EXPECT_EQ(f.initial->n_groups, 3u);
}

TEST(Io, RejectsMalformedCsv) {
  std::stringstream bad_ids("unit,attribute\n0,1\n0,0\n");
  EXPECT_THROW(io::read_population(io::read_csv(bad_ids)), InvalidInput);
  std::stringstream ragged("unit,attribute\n0,1,3\n");
  EXPECT_THROW(io::read_csv(ragged), InvalidInput);
  std::stringstream missing("unit,attr\n0,1\n");
  EXPECT_THROW(io::read_population(io::read_csv(missing)), InvalidInput);
}
