#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "grouprand/error.hpp"

namespace grouprand::lp {

enum class Sense { less_equal, greater_equal, equal };

struct Constraint {
  std::vector<double> coefficients;
  Sense sense = Sense::less_equal;
  double rhs = 0.0;
  std::string name;
};

/// maximize objective . x  subject to  rows,  x >= 0.
struct LinearProgram {
  std::vector<double> objective;
  std::vector<Constraint> rows;

  std::size_t n_variables() const { return objective.size(); }
};

enum class Status { optimal, infeasible, unbounded };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::optimal: return "optimal";
    case Status::infeasible: return "infeasible";
    case Status::unbounded: return "unbounded";
  }
  return "unknown";
}

struct Solution {
  Status status = Status::infeasible;
  std::vector<double> values;
  double objective = 0.0;
  /// Row duals (shadow prices) in the orientation of the input rows.
  std::vector<double> duals;
  /// max |y_i * slack_i| and |x_j * reduced cost_j| at the returned point.
  double complementary_slackness = 0.0;
  std::size_t pivots = 0;
};

inline constexpr double kTolerance = 1e-9;

/// Primal feasibility of `x` within `tol`.
inline bool is_feasible(const LinearProgram& program, const std::vector<double>& x, double tol = 1e-7) {
  if (x.size() != program.n_variables()) return false;
  for (double v : x)
    if (v < -tol) return false;
  for (const auto& row : program.rows) {
    double lhs = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) lhs += row.coefficients[j] * x[j];
    switch (row.sense) {
      case Sense::less_equal:
        if (lhs > row.rhs + tol) return false;
        break;
      case Sense::greater_equal:
        if (lhs < row.rhs - tol) return false;
        break;
      case Sense::equal:
        if (std::abs(lhs - row.rhs) > tol) return false;
        break;
    }
  }
  return true;
}

namespace detail {

/// Dense tableau. Columns: structural | slack/surplus | artificial | rhs.
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * (cols + 1), 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data_[r * (cols_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * (cols_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, cols_); }
  double rhs(std::size_t r) const { return at(r, cols_); }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  void pivot(std::size_t pr, std::size_t pc) {
    const double p = at(pr, pc);
    for (std::size_t c = 0; c <= cols_; ++c) at(pr, c) /= p;
    at(pr, pc) = 1.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= cols_; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
    }
  }

 private:
  std::size_t rows_, cols_;
  std::vector<double> data_;
};

struct Simplex {
  Tableau tableau;
  std::vector<std::size_t> basis;
  std::vector<char> allowed;  // columns permitted to enter
  std::size_t pivots = 0;

  /// Reduced costs c_j - c_B B^{-1} A_j for cost vector `cost`.
  std::vector<double> reduced_costs(const std::vector<double>& cost) const {
    std::vector<double> r(cost);
    for (std::size_t i = 0; i < tableau.rows(); ++i) {
      const double cb = cost[basis[i]];
      if (cb == 0.0) continue;
      for (std::size_t j = 0; j < tableau.cols(); ++j) r[j] -= cb * tableau.at(i, j);
    }
    return r;
  }

  /// Maximizes cost . x from the current basis using Bland's rule.
  Status optimize(const std::vector<double>& cost) {
    while (true) {
      const auto r = reduced_costs(cost);
      std::size_t enter = tableau.cols();
      for (std::size_t j = 0; j < tableau.cols(); ++j) {
        if (allowed[j] && r[j] > kTolerance) {
          enter = j;
          break;
        }
      }
      if (enter == tableau.cols()) return Status::optimal;
      std::size_t leave = tableau.rows();
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < tableau.rows(); ++i) {
        const double a = tableau.at(i, enter);
        if (a <= kTolerance) continue;
        const double ratio = tableau.rhs(i) / a;
        if (leave == tableau.rows() || ratio < best - kTolerance ||
            (std::abs(ratio - best) <= kTolerance && basis[i] < basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave == tableau.rows()) return Status::unbounded;
      tableau.pivot(leave, enter);
      basis[leave] = enter;
      ++pivots;
    }
  }
};

}  // namespace detail

/// Two-phase dense simplex with Bland's anti-cycling rule.
inline Solution solve_lp(const LinearProgram& program) {
  const std::size_t n = program.n_variables();
  const std::size_t m = program.rows.size();
  for (const auto& row : program.rows) {
    grouprand::detail::require(row.coefficients.size() == n, "constraint '" + row.name + "' has the wrong number of coefficients");
  }

  // Orient every row so that rhs >= 0.
  std::vector<double> flip(m, 1.0);
  std::vector<Sense> sense(m);
  for (std::size_t i = 0; i < m; ++i) {
    sense[i] = program.rows[i].sense;
    if (program.rows[i].rhs < 0.0) {
      flip[i] = -1.0;
      if (sense[i] == Sense::less_equal) sense[i] = Sense::greater_equal;
      else if (sense[i] == Sense::greater_equal) sense[i] = Sense::less_equal;
    }
  }
  std::size_t n_slack = 0, n_art = 0;
  for (auto s : sense) {
    if (s != Sense::equal) ++n_slack;
    if (s != Sense::less_equal) ++n_art;
  }
  const std::size_t cols = n + n_slack + n_art;
  detail::Simplex sx{detail::Tableau(m, cols), std::vector<std::size_t>(m), std::vector<char>(cols, 1)};
  // Column that carries +e_i for row i in the oriented system (for duals).
  std::vector<std::size_t> unit_col(m);
  {
    std::size_t slack = n, art = n + n_slack;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) sx.tableau.at(i, j) = flip[i] * program.rows[i].coefficients[j];
      sx.tableau.rhs(i) = flip[i] * program.rows[i].rhs;
      switch (sense[i]) {
        case Sense::less_equal:
          sx.tableau.at(i, slack) = 1.0;
          sx.basis[i] = slack;
          unit_col[i] = slack++;
          break;
        case Sense::greater_equal:
          sx.tableau.at(i, slack++) = -1.0;
          sx.tableau.at(i, art) = 1.0;
          sx.basis[i] = art;
          unit_col[i] = art++;
          break;
        case Sense::equal:
          sx.tableau.at(i, art) = 1.0;
          sx.basis[i] = art;
          unit_col[i] = art++;
          break;
      }
    }
  }

  Solution solution;
  if (n_art > 0) {
    std::vector<double> phase1(cols, 0.0);
    for (std::size_t j = n + n_slack; j < cols; ++j) phase1[j] = -1.0;
    sx.optimize(phase1);
    double infeasibility = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (sx.basis[i] >= n + n_slack) infeasibility += sx.tableau.rhs(i);
    if (infeasibility > 1e-7) {
      solution.status = Status::infeasible;
      solution.pivots = sx.pivots;
      return solution;
    }
    // Drive zero-level artificials out of the basis where possible; rows
    // without any usable pivot are redundant and stay inert.
    for (std::size_t i = 0; i < m; ++i) {
      if (sx.basis[i] < n + n_slack) continue;
      for (std::size_t j = 0; j < n + n_slack; ++j) {
        if (std::abs(sx.tableau.at(i, j)) > kTolerance) {
          sx.tableau.pivot(i, j);
          sx.basis[i] = j;
          ++sx.pivots;
          break;
        }
      }
    }
    for (std::size_t j = n + n_slack; j < cols; ++j) sx.allowed[j] = 0;
  }

  std::vector<double> cost(cols, 0.0);
  std::copy(program.objective.begin(), program.objective.end(), cost.begin());
  solution.status = sx.optimize(cost);
  solution.pivots = sx.pivots;
  if (solution.status != Status::optimal) return solution;

  solution.values.assign(n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    if (sx.basis[i] < n) solution.values[sx.basis[i]] = std::max(0.0, sx.tableau.rhs(i));
  for (std::size_t j = 0; j < n; ++j) solution.objective += program.objective[j] * solution.values[j];

  const auto reduced = sx.reduced_costs(cost);
  solution.duals.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) solution.duals[i] = -reduced[unit_col[i]] * flip[i];

  double residual = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double lhs = 0.0;
    for (std::size_t j = 0; j < n; ++j) lhs += program.rows[i].coefficients[j] * solution.values[j];
    residual = std::max(residual, std::abs(solution.duals[i] * (program.rows[i].rhs - lhs)));
  }
  for (std::size_t j = 0; j < n; ++j) {
    double yA = 0.0;
    for (std::size_t i = 0; i < m; ++i) yA += solution.duals[i] * program.rows[i].coefficients[j];
    residual = std::max(residual, std::abs(solution.values[j] * (program.objective[j] - yA)));
  }
  solution.complementary_slackness = residual;
  return solution;
}

}  // namespace grouprand::lp
