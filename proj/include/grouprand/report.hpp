#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "grouprand/error.hpp"
#include "grouprand/simulation.hpp"

namespace grouprand {

namespace detail {

inline std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace detail

inline void write_power_csv(const PowerTable& table, std::ostream& os) {
  os << "m,strategy,tau,power,mc_se,mean_focal_k,mean_focal_kprime,replications,degenerate\n";
  for (const auto& r : table.rows) {
    os << r.group_size << ',' << r.strategy << ',' << detail::fixed(r.tau) << ',' << detail::fixed(r.power) << ','
       << detail::fixed(r.mc_se) << ',' << detail::fixed(r.mean_focal_k, 2) << ','
       << detail::fixed(r.mean_focal_k_prime, 2) << ',' << r.replications << ',' << (r.degenerate ? 1 : 0) << '\n';
  }
}

/// Power against tau for one group size, one polyline per strategy.
inline void write_power_svg(const PowerTable& table, std::size_t group_size, std::ostream& os) {
  constexpr double width = 640, height = 420, left = 60, right = 170, top = 40, bottom = 50;
  constexpr double plot_w = width - left - right, plot_h = height - top - bottom;
  static const char* palette[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"};

  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<double, double>>> curves;
  double tau_lo = 0, tau_hi = 0;
  bool first = true;
  for (const auto& r : table.rows) {
    if (r.group_size != group_size) continue;
    if (!curves.contains(r.strategy)) order.push_back(r.strategy);
    curves[r.strategy].emplace_back(r.tau, r.power);
    tau_lo = first ? r.tau : std::min(tau_lo, r.tau);
    tau_hi = first ? r.tau : std::max(tau_hi, r.tau);
    first = false;
  }
  if (tau_hi <= tau_lo) tau_hi = tau_lo + 1.0;
  const auto px = [&](double tau) { return left + (tau - tau_lo) / (tau_hi - tau_lo) * plot_w; };
  const auto py = [&](double p) { return top + (1.0 - p) * plot_h; };
  using detail::fixed;

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << fixed(left + plot_w / 2, 1) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">Power, m = "
     << group_size << "</text>\n";
  for (int i = 0; i <= 5; ++i) {
    const double p = i / 5.0;
    os << "<line x1=\"" << fixed(left, 1) << "\" y1=\"" << fixed(py(p), 1) << "\" x2=\"" << fixed(left + plot_w, 1)
       << "\" y2=\"" << fixed(py(p), 1) << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"" << fixed(left - 8, 1) << "\" y=\"" << fixed(py(p) + 4, 1) << "\" text-anchor=\"end\">"
       << fixed(p, 1) << "</text>\n";
  }
  std::set<double> ticks;
  for (const auto& [name, pts] : curves)
    for (const auto& [tau, p] : pts) ticks.insert(tau);
  for (double tau : ticks) {
    os << "<text x=\"" << fixed(px(tau), 1) << "\" y=\"" << fixed(top + plot_h + 18, 1) << "\" text-anchor=\"middle\">"
       << fixed(tau, 2) << "</text>\n";
  }
  os << "<rect x=\"" << fixed(left, 1) << "\" y=\"" << fixed(top, 1) << "\" width=\"" << fixed(plot_w, 1)
     << "\" height=\"" << fixed(plot_h, 1) << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << fixed(left + plot_w / 2, 1) << "\" y=\"" << fixed(height - 10, 1)
     << "\" text-anchor=\"middle\">additive effect tau</text>\n";
  os << "<text x=\"16\" y=\"" << fixed(top + plot_h / 2, 1) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << fixed(top + plot_h / 2, 1) << ")\">power</text>\n";

  for (std::size_t s = 0; s < order.size(); ++s) {
    auto pts = curves[order[s]];
    std::sort(pts.begin(), pts.end());
    const char* color = palette[s % std::size(palette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i)
      os << (i ? " " : "") << fixed(px(pts[i].first), 1) << ',' << fixed(py(pts[i].second), 1);
    os << "\"/>\n";
    for (const auto& [tau, p] : pts)
      os << "<circle cx=\"" << fixed(px(tau), 1) << "\" cy=\"" << fixed(py(p), 1) << "\" r=\"3\" fill=\"" << color
         << "\"/>\n";
    const double ly = top + 14 + 20.0 * static_cast<double>(s);
    os << "<line x1=\"" << fixed(left + plot_w + 12, 1) << "\" y1=\"" << fixed(ly, 1) << "\" x2=\""
       << fixed(left + plot_w + 36, 1) << "\" y2=\"" << fixed(ly, 1) << "\" stroke=\"" << color
       << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << fixed(left + plot_w + 42, 1) << "\" y=\"" << fixed(ly + 4, 1) << "\">"
       << detail::xml_escape(order[s]) << "</text>\n";
  }
  os << "</svg>\n";
}

/// Writes `power.csv` and one `power_m<m>.svg` per group size into `dir`
/// and returns the paths written.
inline std::vector<std::filesystem::path> emit_report(const PowerTable& table, const std::filesystem::path& dir) {
  detail::require(!table.rows.empty(), "emit_report: empty power table");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::vector<std::filesystem::path> written;
  const auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    return out;
  };
  {
    const auto p = dir / "power.csv";
    auto out = open(p);
    write_power_csv(table, out);
    if (!out) throw Error("cannot write " + p.string());
    written.push_back(p);
  }
  std::vector<std::size_t> sizes;
  for (const auto& r : table.rows)
    if (std::find(sizes.begin(), sizes.end(), r.group_size) == sizes.end()) sizes.push_back(r.group_size);
  for (std::size_t m : sizes) {
    const auto p = dir / ("power_m" + std::to_string(m) + ".svg");
    auto out = open(p);
    write_power_svg(table, m, out);
    if (!out) throw Error("cannot write " + p.string());
    written.push_back(p);
  }
  return written;
}

}  // namespace grouprand
