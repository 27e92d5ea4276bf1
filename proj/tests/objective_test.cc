#include <cmath>

#include <gtest/gtest.h>

#include "rss/objective.hpp"
#include "rss/rng.hpp"

namespace rss {
namespace {

Point P(double x) { return Point::Constant(1, x); }

Point P2(double a, double b) {
  Point p(2);
  p << a, b;
  return p;
}

// Central differences with a step scaled to the point.
Point FiniteDifference(const Objective& f, const Point& x) {
  Point g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = 1e-5 * std::max(1.0, std::abs(x[k]));
    Point up = x, down = x;
    up[k] += h;
    down[k] -= h;
    g[k] = (f.Value(up) - f.Value(down)) / (2.0 * h);
  }
  return g;
}

std::vector<Objective> Zoo() {
  std::vector<Objective> zoo = FivePolynomialProblem().objectives();
  Eigen::MatrixXd q(2, 2);
  q << 2.0, 0.5, 0.5, 1.0;
  zoo.push_back(Objective::Quadratic(q, P2(1.0, -1.0), 3.0));
  zoo.push_back(Objective::Logistic(2, 9));
  zoo.push_back(Objective::FromPolynomial(SeparablePolynomial({Polynomial({0, 1, 1}), Polynomial({0, 0, 0, 0, 2})})));
  return zoo;
}

TEST(Objective, EvaluatesPolynomialExperimentFunctions) {
  const GlobalProblem prob = FivePolynomialProblem();
  EXPECT_DOUBLE_EQ(prob.objective(0).Value(P(2.0)), 4.0);
  EXPECT_DOUBLE_EQ(prob.objective(2).Value(P(0.0)), 0.0);
  EXPECT_DOUBLE_EQ(prob.Value(P(1.0)), 7.0);
  for (double x : {-3.0, -0.5, 0.25, 2.0}) {
    EXPECT_NEAR(prob.Value(P(x)), 3.5 * (x * x + std::pow(x, 4)), 1e-12);
  }
}

TEST(Objective, GradientExamplesMatchFiniteDifferences) {
  const GlobalProblem prob = FivePolynomialProblem();
  EXPECT_NEAR(FiniteDifference(prob.objective(1), P(1.0))[0], 4.0, 1e-6);
  EXPECT_DOUBLE_EQ(prob.objective(1).Gradient(P(1.0))[0], 4.0);
  EXPECT_DOUBLE_EQ(prob.objective(0).Gradient(P(0.0))[0], 0.0);
  EXPECT_NEAR(FiniteDifference(prob.objective(3), P(2.0))[0], 20.0, 1e-6);
  EXPECT_DOUBLE_EQ(prob.objective(3).Gradient(P(2.0))[0], 20.0);
}

TEST(Objective, GradientsAgreeWithFiniteDifferencesAtRandomPoints) {
  Stream rng(21, StreamPurpose::kTrial, 0, 0);
  for (const Objective& f : Zoo()) {
    for (int t = 0; t < 100; ++t) {
      Point x(f.dimension());
      for (int k = 0; k < f.dimension(); ++k) x[k] = rng.Uniform(-3, 3);
      const Point g = f.Gradient(x);
      const Point fd = FiniteDifference(f, x);
      EXPECT_LE((g - fd).norm(), 1e-6 * std::max(1.0, g.norm())) << f.Describe();
    }
  }
}

TEST(Objective, DimensionMismatchThrows) {
  const Objective f = Objective::Polynomial1D({0, 0, 1});
  EXPECT_THROW(f.Value(P2(1, 1)), InvalidArgument);
  EXPECT_THROW(f.Gradient(P2(1, 1)), InvalidArgument);
  EXPECT_THROW(GlobalProblem({f}, FeasibleSet::Cube(2, -1, 1)), InvalidArgument);
}

TEST(FeasibleSet, ProjectionExamples) {
  const FeasibleSet box = FeasibleSet::Cube(1, -30, 30);
  EXPECT_EQ(box.Project(P(40))[0], 30.0);
  EXPECT_EQ(box.Project(P(-12.5))[0], -12.5);
  EXPECT_EQ(FeasibleSet::Cube(2, -1, 1).Project(P2(2, -3)), P2(1, -1));
}

TEST(FeasibleSet, ProjectionIsNonExpansiveAndIdempotent) {
  Stream rng(22, StreamPurpose::kTrial, 0, 0);
  const FeasibleSet box(P2(-1.0, -2.0), P2(3.0, 0.5));
  for (int t = 0; t < 1000; ++t) {
    const Point x = P2(rng.Uniform(-10, 10), rng.Uniform(-10, 10));
    const Point y = P2(rng.Uniform(-10, 10), rng.Uniform(-10, 10));
    const Point px = box.Project(x);
    EXPECT_LE((px - box.Project(y)).norm(), (x - y).norm());
    EXPECT_EQ(box.Project(px), px);
    EXPECT_TRUE(box.Contains(px));
  }
}

TEST(FeasibleSet, RejectsInvertedBounds) {
  EXPECT_THROW(FeasibleSet(P(1), P(0)), InvalidArgument);
  EXPECT_THROW(FeasibleSet(P2(0, 0), P(1)), InvalidArgument);
}

TEST(Objective, ConvexityInequalityHoldsOnRandomChords) {
  Stream rng(23, StreamPurpose::kTrial, 0, 0);
  for (const Objective& f : Zoo()) {
    const FeasibleSet box = FeasibleSet::Cube(f.dimension(), -5, 5);
    EXPECT_TRUE(IsConvexOn(f, box)) << f.Describe();
    for (int t = 0; t < 500; ++t) {
      Point x(f.dimension()), y(f.dimension());
      for (int k = 0; k < f.dimension(); ++k) {
        x[k] = rng.Uniform(-5, 5);
        y[k] = rng.Uniform(-5, 5);
      }
      const double s = rng.Uniform01();
      const double lhs = f.Value(s * x + (1 - s) * y);
      const double rhs = s * f.Value(x) + (1 - s) * f.Value(y);
      EXPECT_LE(lhs, rhs + 1e-9 * std::max(1.0, std::abs(rhs)));
    }
  }
}

TEST(Objective, NonConvexPolynomialIsRejectedByCertificate) {
  EXPECT_FALSE(IsConvexOn(Objective::Polynomial1D({0, 0, 1, 0, -0.01}), FeasibleSet::Cube(1, -30, 30)));
  EXPECT_TRUE(IsConvexOn(Objective::Polynomial1D({0, 0, 1, 0, -0.01}), FeasibleSet::Cube(1, -1, 1)));
  Eigen::MatrixXd indefinite(2, 2);
  indefinite << 1.0, 0.0, 0.0, -1.0;
  EXPECT_FALSE(IsConvexOn(Objective::Quadratic(indefinite, P2(0, 0), 0), FeasibleSet::Cube(2, -1, 1)));
}

TEST(EstimateConstants, AnalyticExamples) {
  const Constants sq = EstimateConstants(Objective::Polynomial1D({0, 0, 1}), FeasibleSet::Cube(1, -30, 30));
  EXPECT_DOUBLE_EQ(sq.L, 60.0);
  EXPECT_DOUBLE_EQ(sq.N, 2.0);
  const Constants flat = EstimateConstants(Objective::Polynomial1D({7.0}), FeasibleSet::Cube(1, -30, 30));
  EXPECT_EQ(flat.L, 0.0);
  EXPECT_EQ(flat.N, 0.0);
  const Constants quartic = EstimateConstants(Objective::Polynomial1D({0, 0, 0, 0, 1}), FeasibleSet::Cube(1, -1, 1));
  EXPECT_DOUBLE_EQ(quartic.L, 4.0);
  EXPECT_DOUBLE_EQ(quartic.N, 12.0);
}

TEST(EstimateConstants, DominatesCoarseAndFineGrids) {
  for (const Objective& f : Zoo()) {
    const Constants c = EstimateConstants(f, FeasibleSet::Cube(f.dimension(), -2, 2));
    EXPECT_GE(c.L, c.grid_L) << f.Describe();
    EXPECT_GE(c.L, c.fine_grid_L) << f.Describe();
    EXPECT_GE(c.N, c.grid_N) << f.Describe();
    EXPECT_GE(c.N, c.fine_grid_N) << f.Describe();
    EXPECT_GE(c.fine_grid_L, c.grid_L * (1 - 1e-12));
  }
}

TEST(SolveCentralized, PolynomialExperimentOptimumIsZero) {
  const CentralSolution s = SolveCentralized(FivePolynomialProblem());
  EXPECT_NEAR(s.x[0], 0.0, 1e-9);
  EXPECT_NEAR(s.f, 0.0, 1e-12);
  EXPECT_LE(s.lower_bound, s.f);
  EXPECT_LT(s.mapping_norm, 1e-10);
}

TEST(SolveCentralized, SingleAgentSquare) {
  const GlobalProblem prob({Objective::Polynomial1D({0, 0, 1})}, FeasibleSet::Cube(1, -30, 30));
  EXPECT_NEAR(SolveCentralized(prob).x[0], 0.0, 1e-10);
}

TEST(SolveCentralized, BoundaryOptimumMatchesGridSearch) {
  const GlobalProblem prob({Objective::Polynomial1D({25, -10, 1})}, FeasibleSet::Cube(1, -1, 1));
  double best_x = 0.0, best_f = INFINITY;
  for (int i = 0; i <= 20000; ++i) {
    const double x = -1.0 + 2.0 * i / 20000.0;
    const double v = (x - 5) * (x - 5);
    if (v < best_f) best_f = v, best_x = x;
  }
  ASSERT_EQ(best_x, 1.0);
  const CentralSolution s = SolveCentralized(prob);
  EXPECT_DOUBLE_EQ(s.x[0], best_x);
  EXPECT_DOUBLE_EQ(s.f, 16.0);
}

TEST(SolveCentralized, LogisticOptimumHasSmallGradientMapping) {
  std::vector<Objective> objs;
  for (int j = 0; j < 5; ++j) objs.push_back(Objective::Logistic(2, 100 + j));
  const GlobalProblem prob(objs, FeasibleSet::Cube(2, -5, 5));
  const CentralSolution s = SolveCentralized(prob);
  EXPECT_LT(s.mapping_norm, 1e-10);
  EXPECT_LE(s.f - s.lower_bound, 1e-9);
  Stream rng(24, StreamPurpose::kTrial, 0, 0);
  for (int t = 0; t < 2000; ++t) {
    const Point x = P2(rng.Uniform(-5, 5), rng.Uniform(-5, 5));
    EXPECT_GE(prob.Value(x), s.f - 1e-12);
  }
}

TEST(SolveCentralized, IterationCapRaises) {
  std::vector<Objective> objs;
  for (int j = 0; j < 3; ++j) objs.push_back(Objective::Logistic(3, 50 + j));
  const GlobalProblem prob(objs, FeasibleSet::Cube(3, -5, 5));
  EXPECT_THROW(SolveCentralized(prob, 1e-14, 2), ConvergenceError);
}

}  // namespace
}  // namespace rss
