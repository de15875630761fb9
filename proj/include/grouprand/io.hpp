#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "grouprand/error.hpp"
#include "grouprand/exposure.hpp"
#include "grouprand/population.hpp"
#include "grouprand/simulation.hpp"

namespace grouprand::io {

/// Header-indexed CSV table; no quoting, fields are trimmed.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  }

  std::size_t require_column(const std::string& name) const {
    if (auto c = column(name)) return *c;
    throw InvalidInput("CSV is missing column '" + name + "'");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline long long to_integer(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw InvalidInput("expected an integer for " + what + ", got '" + s + "'");
}

inline double to_real(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw InvalidInput("expected a number for " + what + ", got '" + s + "'");
}

/// Row index of every unit id; ids must be exactly 0..N-1.
inline std::vector<std::size_t> unit_rows(const CsvTable& t) {
  const std::size_t col = t.require_column("unit");
  std::vector<std::size_t> row_of(t.rows.size(), t.rows.size());
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const long long u = to_integer(t.rows[r].at(col), "unit");
    if (u < 0 || static_cast<std::size_t>(u) >= t.rows.size() || row_of[static_cast<std::size_t>(u)] != t.rows.size()) {
      throw InvalidInput("unit ids must be a permutation of 0..N-1 (bad id " + std::to_string(u) + ")");
    }
    row_of[static_cast<std::size_t>(u)] = r;
  }
  return row_of;
}

}  // namespace detail

inline CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    auto fields = detail::split(line);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw InvalidInput("CSV row has " + std::to_string(fields.size()) + " fields, header has " +
                         std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(fields));
  }
  if (!have_header) throw InvalidInput("CSV input is empty");
  return t;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  return read_csv(in);
}

/// Assignment from `group` / `treatment` style columns; m and K are
/// inferred from the largest group label.
inline Assignment assignment_from_columns(const CsvTable& t, const std::string& group_col,
                                          const std::string& treatment_col,
                                          const std::vector<Code>& treatment_alphabet = binary_alphabet()) {
  const auto row_of = detail::unit_rows(t);
  const std::size_t gc = t.require_column(group_col);
  const std::size_t wc = t.require_column(treatment_col);
  Assignment a;
  a.treatment_alphabet = treatment_alphabet;
  const std::size_t n = t.rows.size();
  a.groups.resize(n);
  a.treatments.resize(n);
  int max_label = 0;
  for (std::size_t u = 0; u < n; ++u) {
    const auto& row = t.rows[row_of[u]];
    a.groups[u] = static_cast<int>(detail::to_integer(row[gc], group_col));
    a.treatments[u] = static_cast<Code>(detail::to_integer(row[wc], treatment_col));
    max_label = std::max(max_label, a.groups[u]);
  }
  a.n_groups = static_cast<std::size_t>(std::max(max_label, 0));
  a.group_size = a.n_groups > 0 && n % a.n_groups == 0 ? n / a.n_groups : 0;
  return a;
}

struct PopulationFile {
  Population population;
  /// Present when the file carries `group0` and `treatment0` columns.
  std::optional<Assignment> initial;
};

/// `unit,attribute[,treatment0,group0]`.
inline PopulationFile read_population(const CsvTable& t, const std::vector<Code>& alphabet = binary_alphabet()) {
  const auto row_of = detail::unit_rows(t);
  const std::size_t ac = t.require_column("attribute");
  std::vector<Code> attributes(t.rows.size());
  for (std::size_t u = 0; u < attributes.size(); ++u)
    attributes[u] = static_cast<Code>(detail::to_integer(t.rows[row_of[u]][ac], "attribute"));
  PopulationFile f{build_population(std::move(attributes), alphabet), std::nullopt};
  if (t.column("group0") && t.column("treatment0")) f.initial = assignment_from_columns(t, "group0", "treatment0");
  return f;
}

inline PopulationFile read_population(const std::filesystem::path& path,
                                      const std::vector<Code>& alphabet = binary_alphabet()) {
  return read_population(read_csv(path), alphabet);
}

/// `unit,group,treatment`.
inline Assignment read_assignment(const std::filesystem::path& path) {
  return assignment_from_columns(read_csv(path), "group", "treatment");
}

/// `unit,outcome`.
inline std::vector<double> read_outcomes(const std::filesystem::path& path) {
  const auto t = read_csv(path);
  const auto row_of = detail::unit_rows(t);
  const std::size_t yc = t.require_column("outcome");
  std::vector<double> y(t.rows.size());
  for (std::size_t u = 0; u < y.size(); ++u) y[u] = detail::to_real(t.rows[row_of[u]][yc], "outcome");
  return y;
}

inline void write_population(std::ostream& os, const Population& population,
                             const Assignment* initial = nullptr) {
  os << "unit,attribute" << (initial ? ",treatment0,group0" : "") << '\n';
  for (std::size_t i = 0; i < population.size(); ++i) {
    os << i << ',' << population.attribute(i);
    if (initial) os << ',' << initial->treatments[i] << ',' << initial->groups[i];
    os << '\n';
  }
}

inline void write_assignment(std::ostream& os, const Assignment& a) {
  os << "unit,group,treatment\n";
  for (std::size_t i = 0; i < a.size(); ++i) os << i << ',' << a.groups[i] << ',' << a.treatments[i] << '\n';
}

inline void write_outcomes(std::ostream& os, const std::vector<double>& y) {
  os << "unit,outcome\n";
  char buf[64];
  for (std::size_t i = 0; i < y.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", y[i]);
    os << i << ',' << buf << '\n';
  }
}

/// Long-format draws: `draw,unit,group,treatment[,exposure]`.
inline void write_draw_header(std::ostream& os, bool with_exposure) {
  os << "draw,unit,group,treatment" << (with_exposure ? ",exposure" : "") << '\n';
}

inline void write_draw(std::ostream& os, std::size_t draw, const Assignment& a,
                       const std::vector<ExposureQuad>* exposures = nullptr) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    os << draw << ',' << i << ',' << a.groups[i] << ',' << a.treatments[i];
    if (exposures) os << ',' << to_string((*exposures)[i]);
    os << '\n';
  }
}

// ---- simulation config ------------------------------------------------------

inline Sidedness parse_sidedness(const std::string& s) {
  if (s == "two" || s == "two_sided" || s == "two-sided") return Sidedness::two_sided;
  if (s == "greater" || s == "one" || s == "one_sided") return Sidedness::greater;
  if (s == "less") return Sidedness::less;
  throw InvalidInput("unknown sidedness '" + s + "'");
}

/// Reads a JSON document whose keys mirror SimulationConfig; absent keys
/// keep their defaults and unknown keys are rejected.
inline SimulationConfig parse_simulation_config(const nlohmann::json& j) {
  SimulationConfig c;
  static const std::vector<std::string> known{
      "n_units",    "n_attribute_one", "group_sizes",    "taus",           "k",          "k_prime",
      "replications", "resamples",     "alpha",          "eta",            "rejection_eta", "treated_count",
      "treated_budget", "strategies",  "sidedness",      "redraw_outcomes", "seed"};
  grouprand::detail::require(j.is_object(), "simulation config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw InvalidInput("unknown simulation config key '" + key + "'");
  }
  try {
    if (j.contains("n_units")) c.n_units = j["n_units"].get<std::size_t>();
    c.n_attribute_one = j.contains("n_attribute_one") ? j["n_attribute_one"].get<std::size_t>() : c.n_units / 2;
    if (j.contains("group_sizes")) c.group_sizes = j["group_sizes"].get<std::vector<std::size_t>>();
    if (j.contains("taus")) c.taus = j["taus"].get<std::vector<double>>();
    if (j.contains("k")) c.k = parse_quad(j["k"].get<std::string>());
    if (j.contains("k_prime")) c.k_prime = parse_quad(j["k_prime"].get<std::string>());
    if (j.contains("replications")) c.replications = j["replications"].get<std::size_t>();
    if (j.contains("resamples")) c.resamples = j["resamples"].get<std::size_t>();
    if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
    if (j.contains("eta")) c.eta = j["eta"].get<double>();
    if (j.contains("rejection_eta")) c.rejection_eta = j["rejection_eta"].get<double>();
    if (j.contains("treated_count")) c.treated_count = j["treated_count"].get<std::size_t>();
    if (j.contains("treated_budget")) c.treated_budget = j["treated_budget"].get<std::size_t>();
    if (j.contains("strategies")) {
      c.strategies.clear();
      for (const auto& s : j["strategies"]) c.strategies.push_back(Strategy::parse(s.get<std::string>()));
    }
    if (j.contains("sidedness")) c.sidedness = parse_sidedness(j["sidedness"].get<std::string>());
    if (j.contains("redraw_outcomes")) c.redraw_outcomes = j["redraw_outcomes"].get<bool>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("simulation config: ") + e.what());
  }
  c.validate();
  return c;
}

inline SimulationConfig read_simulation_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput("cannot parse " + path.string() + ": " + e.what());
  }
  return parse_simulation_config(j);
}

}  // namespace grouprand::io
