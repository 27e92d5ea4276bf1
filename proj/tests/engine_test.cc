#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "rss/engine.hpp"

namespace rss {
namespace {

RunOptions Options(Algorithm a, double delta, std::uint64_t seed, int iters = 2000) {
  RunOptions o;
  o.algorithm = a;
  o.delta = delta;
  o.seed = seed;
  o.max_iter = iters;
  o.init = EvenlySpaced(FeasibleSet::Cube(1, -1, 1), 5);
  return o;
}

TEST(StepSchedule, Values) {
  const StepSchedule s = StepSchedule::InvSqrt();
  EXPECT_DOUBLE_EQ(s.Alpha(1), 1.0);
  EXPECT_DOUBLE_EQ(s.Alpha(4), 0.5);
  EXPECT_TRUE(s.Convergent());
  const StepSchedule k = StepSchedule::InvK(2.0, 1.0);
  EXPECT_DOUBLE_EQ(k.Alpha(3), 0.5);
  EXPECT_TRUE(k.Convergent());
  EXPECT_FALSE(StepSchedule::Constant(0.1).Convergent());
  EXPECT_THROW(StepSchedule::InvK(-1.0, 0.0), InvalidArgument);
  EXPECT_THROW(StepSchedule::InvK(1.0, -1.0), InvalidArgument);
  EXPECT_THROW(StepSchedule::Constant(0.0), InvalidArgument);
  for (int i = 1; i < 1000; ++i) {
    EXPECT_LE(s.Alpha(i + 1), s.Alpha(i));
    EXPECT_LE(k.Alpha(i + 1), k.Alpha(i));
  }
}

TEST(Algorithm, NamesRoundTrip) {
  for (Algorithm a : {Algorithm::kDgd, Algorithm::kRssNb, Algorithm::kRssLb, Algorithm::kFs}) {
    EXPECT_EQ(ParseAlgorithm(AlgorithmName(a)), a);
  }
  EXPECT_EQ(ParseAlgorithm("RSS_NB"), Algorithm::kRssNb);
  EXPECT_THROW(ParseAlgorithm("admm"), InvalidArgument);
}

TEST(EvenlySpaced, CoversDiagonal) {
  const auto pts = EvenlySpaced(FeasibleSet::Cube(2, -30, 30), 5);
  ASSERT_EQ(pts.size(), 5u);
  EXPECT_DOUBLE_EQ(pts[0][0], -30.0);
  EXPECT_DOUBLE_EQ(pts[2][1], 0.0);
  EXPECT_DOUBLE_EQ(pts[4][1], 30.0);
  EXPECT_EQ(EvenlySpaced(FeasibleSet::Cube(1, -2, 4), 1)[0][0], 1.0);
}

TEST(RunDgd, SingleAgentMatchesScalarGradientDescent) {
  const Topology one = Topology::FromEdges(1, {});
  const GlobalProblem prob({Objective::Polynomial1D({0, 0, 1})}, FeasibleSet::Cube(1, -30, 30));
  RunOptions o;
  o.max_iter = 300;
  o.init = std::vector<Point>{Point::Constant(1, 10.0)};
  const ExecutionTrace t = RunDgd(prob, one, FusionMatrix::Metropolis(one), o);
  double x = 10.0;
  for (int k = 1; k <= 300; ++k) {
    const double next = std::clamp(x - (1.0 / std::sqrt(k)) * 2.0 * x, -30.0, 30.0);
    EXPECT_LE(std::abs(next), std::abs(x));
    x = next;
    EXPECT_EQ(t.State(k + 1, 0)[0], x);
  }
  EXPECT_LT(std::abs(x), 1e-6);
}

TEST(RunDgd, CommonOptimumIsAFixedPoint) {
  const Topology c5 = Topology::Cycle(5);
  std::vector<Objective> same(5, Objective::Polynomial1D({4, -4, 1}));  // (x - 2)^2
  const GlobalProblem prob(same, FeasibleSet::Cube(1, -30, 30));
  RunOptions o;
  o.max_iter = 500;
  o.init = std::vector<Point>(5, Point::Constant(1, 2.0));
  const ExecutionTrace t = RunDgd(prob, c5, FusionMatrix::Metropolis(c5), o);
  for (int k = 1; k <= 501; ++k)
    for (int j = 0; j < 5; ++j) EXPECT_EQ(t.State(k, j)[0], 2.0);
}

TEST(RunDgd, PolynomialExperimentConvergesOnCycle) {
  const Topology c5 = Topology::Cycle(5);
  const GlobalProblem prob = FivePolynomialProblem();
  const ExecutionTrace t = RunDgd(prob, c5, FusionMatrix::Metropolis(c5), Options(Algorithm::kDgd, 0, 1, 10000));
  Point mean = Point::Zero(1);
  for (const Point& x : t.StatesAt(10001)) mean += x / 5.0;
  EXPECT_LT(prob.Value(mean), 1e-3);
}

TEST(Reduction, ZeroDeltaPerturbedRunsEqualDgd) {
  const GlobalProblem prob = FivePolynomialProblem();
  for (const Topology& topo : {Topology::Cycle(5), Topology::Complete(5), Topology::Star(5)}) {
    const FusionMatrix b = FusionMatrix::Metropolis(topo);
    const ExecutionTrace dgd = RunDgd(prob, topo, b, Options(Algorithm::kDgd, 0, 1));
    for (std::uint64_t seed : {1u, 2u}) {
      EXPECT_EQ(RunRssNb(prob, topo, b, Options(Algorithm::kRssNb, 0.0, seed)).StateDigest(), dgd.StateDigest());
      EXPECT_EQ(RunRssLb(prob, topo, b, Options(Algorithm::kRssLb, 0.0, seed)).StateDigest(), dgd.StateDigest());
      RunOptions fs = Options(Algorithm::kFs, 0.0, seed);
      fs.delta_coeff = 0.0;
      EXPECT_EQ(RunFs(prob, topo, b, fs).StateDigest(), dgd.StateDigest());
    }
  }
}

TEST(Determinism, SameSeedSameDigest) {
  const Topology c5 = Topology::Cycle(5);
  const FusionMatrix b = FusionMatrix::Metropolis(c5);
  const GlobalProblem prob = FivePolynomialProblem();
  for (Algorithm a : {Algorithm::kRssNb, Algorithm::kRssLb}) {
    const auto first = rss::Run(prob, c5, b, Options(a, 1.0, 3)).StateDigest();
    EXPECT_EQ(rss::Run(prob, c5, b, Options(a, 1.0, 3)).StateDigest(), first);
    EXPECT_NE(rss::Run(prob, c5, b, Options(a, 1.0, 4)).StateDigest(), first);
  }
}

TEST(Digest, NegativeZeroHashesAsZero) {
  ExecutionTrace a;
  a.num_agents = 1;
  a.dimension = 1;
  a.alphas = {1.0};
  a.states = {0.0, 1.0};
  ExecutionTrace b = a;
  b.states = {-0.0, 1.0};
  EXPECT_EQ(a.StateDigest(), b.StateDigest());
  b.states = {0.0, 1.0 + 1e-16 * 2};
  EXPECT_NE(a.StateDigest(), b.StateDigest());
  EXPECT_EQ(DigestHex(0xabcULL), "0000000000000abc");
}

TEST(Invariants, HoldEveryRoundForAllAlgorithms) {
  const GlobalProblem prob = FivePolynomialProblem();
  for (const Topology& topo : {Topology::Cycle(5), Topology::Complete(5), Topology::Path(5)}) {
    const FusionMatrix b = FusionMatrix::Metropolis(topo);
    for (Algorithm a : {Algorithm::kDgd, Algorithm::kRssNb, Algorithm::kRssLb, Algorithm::kFs}) {
      for (double delta : {1.0, 15.0}) {
        RunOptions o = Options(a, delta, 2);
        o.delta_coeff = 0.01;
        const ExecutionTrace t = rss::Run(prob, topo, b, o);
        const InvariantLog& log = t.invariants;
        EXPECT_EQ(log.rounds_audited, 2000);
        EXPECT_LE(log.max_perturbation_sum, 1e-12);
        EXPECT_LE(log.max_fused_sum, 1e-12);
        EXPECT_LE(log.max_local_balance, 1e-12);
        EXPECT_LE(log.max_average_drift, 1e-12);
        EXPECT_LE(log.max_perspective_gap, 1e-12);
        EXPECT_LE(log.max_stochasticity_error, 1e-12);
        EXPECT_LE(log.max_perturbation_norm, delta);
        EXPECT_LE(log.max_fused_norm, delta * (1 + 1e-12));
        EXPECT_TRUE(log.states_in_box);
        for (int k = 1; k <= 2001; ++k)
          for (const Point& x : t.StatesAt(k)) EXPECT_TRUE(prob.feasible().Contains(x));
      }
    }
  }
}

TEST(Trace, RecordsDetailsAtRequestedRounds) {
  const Topology c5 = Topology::Cycle(5);
  const FusionMatrix b = FusionMatrix::Metropolis(c5);
  RunOptions o = Options(Algorithm::kRssNb, 1.0, 1, 100);
  o.record_every = 25;
  const ExecutionTrace nb = rss::Run(FivePolynomialProblem(), c5, b, o);
  ASSERT_EQ(nb.details.size(), 5u);
  EXPECT_EQ(nb.details[0].round, 1);
  EXPECT_EQ(nb.details[4].round, 100);
  const RoundDetail& det = nb.details[2];
  EXPECT_EQ(det.shares.size(), 10u);
  Point sum = Point::Zero(1);
  for (const Point& d : det.d) sum += d;
  EXPECT_LE(sum.norm(), 1e-12);
  for (int j = 0; j < 5; ++j) {
    const Point expected = nb.State(det.round, j) + nb.Alpha(det.round) * det.d[j];
    EXPECT_EQ(det.w[j], expected);
  }
  o.algorithm = Algorithm::kRssLb;
  const ExecutionTrace lb = rss::Run(FivePolynomialProblem(), c5, b, o);
  EXPECT_EQ(lb.details[1].w_links.size(), 10u);
  EXPECT_EQ(lb.details[1].lb_d.size(), 10u);
  o.record_every = 0;
  EXPECT_TRUE(rss::Run(FivePolynomialProblem(), c5, b, o).details.empty());
}

TEST(Engine, RejectsBadInputs) {
  const Topology c5 = Topology::Cycle(5);
  const FusionMatrix b = FusionMatrix::Metropolis(c5);
  const GlobalProblem prob = FivePolynomialProblem();
  RunOptions o = Options(Algorithm::kDgd, 0, 1, 10);
  o.init = std::vector<Point>(5, Point::Constant(1, 31.0));
  EXPECT_THROW(rss::Run(prob, c5, b, o), InvalidArgument);
  o.init.reset();
  o.max_iter = 0;
  EXPECT_THROW(rss::Run(prob, c5, b, o), InvalidArgument);
  o.max_iter = 10;
  o.delta = -1;
  EXPECT_THROW(rss::Run(prob, c5, b, o), InvalidArgument);
  std::vector<Objective> logistic(5, Objective::Logistic(1, 1));
  const GlobalProblem lp(logistic, FeasibleSet::Cube(1, -5, 5));
  EXPECT_THROW(RunFs(lp, c5, b, Options(Algorithm::kFs, 0, 1, 10)), InvalidArgument);
  EXPECT_THROW(rss::Run(prob, Topology::Cycle(4), FusionMatrix::Metropolis(Topology::Cycle(4)), Options(Algorithm::kDgd, 0, 1, 10)),
               InvalidArgument);
}

TEST(Engine, AcceptsPerRoundFusionProvider) {
  const Topology c5 = Topology::Cycle(5);
  const FusionMatrix exclusive = FusionMatrix::Metropolis(c5);
  const FusionMatrix inclusive = FusionMatrix::Metropolis(c5, DegreeConvention::kSelfInclusive);
  FusionProvider alternate = [&](int k) -> const FusionMatrix& { return k % 2 ? exclusive : inclusive; };
  const ExecutionTrace t = rss::Run(FivePolynomialProblem(), c5, alternate, Options(Algorithm::kRssNb, 1.0, 1, 500));
  EXPECT_LE(t.invariants.max_average_drift, 1e-12);
  EXPECT_LE(t.invariants.max_perturbation_sum, 1e-12);
  EXPECT_NE(t.StateDigest(), rss::Run(FivePolynomialProblem(), c5, exclusive, Options(Algorithm::kRssNb, 1.0, 1, 500)).StateDigest());
}

// Second derivative below zero somewhere on the box, found by grid scan.
bool HasNegativeCurvature(const SeparablePolynomial& f, double lo, double hi) {
  const Polynomial second = f.part(0).Derivative().Derivative();
  for (int i = 0; i <= 6000; ++i) {
    if (second.Evaluate(lo + (hi - lo) * i / 6000.0) < 0.0) return true;
  }
  return false;
}

TEST(RunFs, ConvergesEvenWithNonConvexObfuscatedObjectives) {
  const Topology c5 = Topology::Cycle(5);
  const FusionMatrix b = FusionMatrix::Metropolis(c5);
  const GlobalProblem prob = FivePolynomialProblem();
  int nonconvex_runs = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    RunOptions o = Options(Algorithm::kFs, 0, seed, 10000);
    o.delta_coeff = 0.01;
    o.d_max = 4;
    const ExecutionTrace t = RunFs(prob, c5, b, o);
    ASSERT_TRUE(t.fs.has_value());
    bool nonconvex = false;
    for (const auto& f : t.fs->obfuscated) nonconvex = nonconvex || HasNegativeCurvature(f, -30, 30);
    if (!nonconvex) continue;
    ++nonconvex_runs;
    Point mean = Point::Zero(1);
    for (const Point& x : t.StatesAt(10001)) mean += x / 5.0;
    EXPECT_LT(prob.Value(mean), 1e-3) << "seed " << seed;
  }
  EXPECT_GT(nonconvex_runs, 0);
}

TEST(RunFs, RecordsNoiseAndGradientBound) {
  const Topology k5 = Topology::Complete(5);
  RunOptions o = Options(Algorithm::kFs, 0, 5, 50);
  o.delta_coeff = 0.1;
  o.d_max = 6;
  const ExecutionTrace t = RunFs(FivePolynomialProblem(), k5, FusionMatrix::Metropolis(k5), o);
  EXPECT_EQ(t.fs->noise.size(), 20u);
  EXPECT_EQ(t.fs->obfuscated.size(), 5u);
  EXPECT_GT(t.fs->noise_gradient_bound, 0.0);
}

}  // namespace
}  // namespace rss
