#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "grouprand/error.hpp"

namespace grouprand::stats {

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Inverse standard normal CDF. Acklam's rational approximation followed by
/// one Halley step against erfc, giving |error| well below 1e-8 on (0, 1).
inline double normal_quantile(double p) {
  detail::require(p > 0.0 && p < 1.0, "normal_quantile: p must lie in (0, 1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

/// Upper tail P(X >= x) of a chi-square variable with `df` degrees of freedom.
inline double chi_square_sf(double x, double df) {
  detail::require(df > 0.0, "chi_square_sf: df must be positive");
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t df = 0;
  double p_value = 1.0;
  /// Fewer than two non-empty rows or columns: no variation to test.
  bool degenerate = false;
};

/// Pearson chi-square test of independence on a contingency table. Empty
/// rows and columns are dropped before counting degrees of freedom.
/// `scale` multiplies the statistic (used for finite-population corrections).
inline ChiSquareResult pearson_independence(const std::vector<std::vector<double>>& table, double scale = 1.0) {
  ChiSquareResult result;
  if (table.empty()) {
    result.degenerate = true;
    return result;
  }
  const std::size_t cols = table.front().size();
  std::vector<double> row_sum(table.size(), 0.0), col_sum(cols, 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < table.size(); ++r) {
    detail::require(table[r].size() == cols, "pearson_independence: ragged table");
    for (std::size_t c = 0; c < cols; ++c) {
      row_sum[r] += table[r][c];
      col_sum[c] += table[r][c];
      total += table[r][c];
    }
  }
  const auto live_rows = static_cast<std::size_t>(std::count_if(row_sum.begin(), row_sum.end(), [](double v) { return v > 0; }));
  const auto live_cols = static_cast<std::size_t>(std::count_if(col_sum.begin(), col_sum.end(), [](double v) { return v > 0; }));
  if (live_rows < 2 || live_cols < 2) {
    result.degenerate = true;
    return result;
  }
  double stat = 0.0;
  for (std::size_t r = 0; r < table.size(); ++r) {
    if (row_sum[r] <= 0) continue;
    for (std::size_t c = 0; c < cols; ++c) {
      if (col_sum[c] <= 0) continue;
      const double expected = row_sum[r] * col_sum[c] / total;
      const double diff = table[r][c] - expected;
      stat += diff * diff / expected;
    }
  }
  result.statistic = stat * scale;
  result.df = (live_rows - 1) * (live_cols - 1);
  result.p_value = chi_square_sf(result.statistic, static_cast<double>(result.df));
  return result;
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and
/// the standard normal CDF.
inline double ks_distance_normal(std::vector<double> samples) {
  detail::require(!samples.empty(), "ks_distance_normal: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = normal_cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

inline double mean(const std::vector<double>& v) {
  detail::require(!v.empty(), "mean of empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Sample variance with denominator n - 1.
inline double sample_variance(const std::vector<double>& v) {
  detail::require(v.size() >= 2, "sample variance needs at least two values");
  const double mu = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - mu) * (x - mu);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace grouprand::stats
