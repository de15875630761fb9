#include <gtest/gtest.h>

#include "grouprand/simplex.hpp"

using namespace grouprand::lp;

TEST(Simplex, SingleBoundedVariable) {
  const LinearProgram p{{2.0}, {{{1.0}, Sense::less_equal, 3.0, "cap"}}};
  const auto s = solve_lp(p);
  ASSERT_EQ(s.status, Status::optimal);
  EXPECT_NEAR(s.values[0], 3.0, 1e-12);
  EXPECT_NEAR(s.objective, 6.0, 1e-12);
  EXPECT_NEAR(s.duals[0], 2.0, 1e-12);
}

TEST(Simplex, TextbookProblemWithDuals) {
  // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18. Optimum (2, 6), value 36.
  const LinearProgram p{{3, 5},
                        {{{1, 0}, Sense::less_equal, 4, "a"},
                         {{0, 2}, Sense::less_equal, 12, "b"},
                         {{3, 2}, Sense::less_equal, 18, "c"}}};
  const auto s = solve_lp(p);
  ASSERT_EQ(s.status, Status::optimal);
  EXPECT_NEAR(s.values[0], 2, 1e-9);
  EXPECT_NEAR(s.values[1], 6, 1e-9);
  EXPECT_NEAR(s.objective, 36, 1e-9);
  EXPECT_NEAR(s.duals[0], 0, 1e-9);
  EXPECT_NEAR(s.duals[1], 1.5, 1e-9);
  EXPECT_NEAR(s.duals[2], 1, 1e-9);
  EXPECT_LT(s.complementary_slackness, 1e-9);
}

TEST(Simplex, GreaterEqualAndEqualityRows) {
  // max x + y, x + y <= 10, x >= 3, x - y == 2.
  const LinearProgram p{{1, 1},
                        {{{1, 1}, Sense::less_equal, 10, ""},
                         {{1, 0}, Sense::greater_equal, 3, ""},
                         {{1, -1}, Sense::equal, 2, ""}}};
  const auto s = solve_lp(p);
  ASSERT_EQ(s.status, Status::optimal);
  EXPECT_NEAR(s.values[0], 6, 1e-9);
  EXPECT_NEAR(s.values[1], 4, 1e-9);
  EXPECT_TRUE(is_feasible(p, s.values));
  EXPECT_LT(s.complementary_slackness, 1e-9);
}

TEST(Simplex, NegativeRightHandSide) {
  // max -x, -x <= -2 (i.e. x >= 2).
  const LinearProgram p{{-1}, {{{-1}, Sense::less_equal, -2, ""}}};
  const auto s = solve_lp(p);
  ASSERT_EQ(s.status, Status::optimal);
  EXPECT_NEAR(s.values[0], 2, 1e-9);
}

TEST(Simplex, Infeasible) {
  const LinearProgram p{{1}, {{{1}, Sense::less_equal, 1, ""}, {{1}, Sense::greater_equal, 2, ""}}};
  EXPECT_EQ(solve_lp(p).status, Status::infeasible);
}

TEST(Simplex, Unbounded) {
  const LinearProgram p{{1, 0}, {{{0, 1}, Sense::less_equal, 1, ""}}};
  EXPECT_EQ(solve_lp(p).status, Status::unbounded);
}

TEST(Simplex, ZeroObjective) {
  const LinearProgram p{{0, 0}, {{{1, 1}, Sense::less_equal, 4, ""}}};
  const auto s = solve_lp(p);
  ASSERT_EQ(s.status, Status::optimal);
  EXPECT_EQ(s.objective, 0.0);
  EXPECT_TRUE(is_feasible(p, s.values));
}

TEST(Simplex, EmptyProgram) {
  const auto s = solve_lp(LinearProgram{});
  ASSERT_EQ(s.status, Status::optimal);
  EXPECT_TRUE(s.values.empty());
  EXPECT_EQ(s.objective, 0.0);
}

TEST(Simplex, DegenerateVertexTerminates) {
  // Several rows tight at the origin; Bland's rule must not cycle.
  const LinearProgram p{{10, -57, -9, -24},
                        {{{0.5, -5.5, -2.5, 9}, Sense::less_equal, 0, ""},
                         {{0.5, -1.5, -0.5, 1}, Sense::less_equal, 0, ""},
                         {{1, 0, 0, 0}, Sense::less_equal, 1, ""}}};
  const auto s = solve_lp(p);
  ASSERT_EQ(s.status, Status::optimal);
  EXPECT_NEAR(s.objective, 1.0, 1e-9);
}

TEST(Simplex, WrongCoefficientCountThrows) {
  const LinearProgram p{{1, 1}, {{{1}, Sense::less_equal, 1, "bad"}}};
  EXPECT_THROW(solve_lp(p), grouprand::InvalidInput);
}
