#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "rss/polynomial.hpp"
#include "rss/types.hpp"

namespace rss {

inline constexpr int kDefaultMaxDegree = 8;

// Axis-aligned box {x : lower <= x <= upper}.
class FeasibleSet {
 public:
  FeasibleSet(Point lower, Point upper);
  static FeasibleSet Cube(int dimension, double lo, double hi);

  int dimension() const { return static_cast<int>(lower_.size()); }
  const Point& lower() const { return lower_; }
  const Point& upper() const { return upper_; }

  // Componentwise clamp.
  Point Project(const Point& z) const;
  bool Contains(const Point& x, double tol = 0.0) const;
  // Box grown by `margin` on every side.
  FeasibleSet Inflate(double margin) const;
  Point Center() const { return 0.5 * (lower_ + upper_); }

 private:
  Point lower_;
  Point upper_;
};

struct PolynomialTerm {
  SeparablePolynomial poly;
  std::vector<Polynomial> derivatives;  // cached p_d'
};

// 0.5 x'Qx + b'x + c with Q symmetric.
struct QuadraticTerm {
  Eigen::MatrixXd q;
  Eigen::VectorXd b;
  double c = 0.0;
};

// (1/m) sum_i log(1 + exp(-y_i a_i'w)) + (lambda/2)|w|^2 on a seeded
// synthetic dataset.
struct LogisticTerm {
  Eigen::MatrixXd features;  // m x D
  Eigen::VectorXd labels;    // +-1
  double lambda = 0.1;
  std::uint64_t seed = 0;
};

enum class ObjectiveKind { kPolynomial, kQuadratic, kLogistic };

class Objective {
 public:
  static Objective Polynomial1D(std::vector<double> coefficients);
  static Objective FromPolynomial(SeparablePolynomial poly);
  static Objective Quadratic(Eigen::MatrixXd q, Eigen::VectorXd b, double c);
  // m samples in D dimensions; features standard normal, labels from a
  // seeded random separator with 10% label flips.
  static Objective Logistic(int dimension, std::uint64_t seed, int samples = 40, double lambda = 0.1);

  ObjectiveKind kind() const;
  int dimension() const { return dimension_; }

  double Value(const Point& x) const;
  Point Gradient(const Point& x) const;

  // nullptr unless kind() == kPolynomial.
  const SeparablePolynomial* polynomial() const;
  const QuadraticTerm* quadratic() const { return std::get_if<QuadraticTerm>(&term_); }
  const LogisticTerm* logistic() const { return std::get_if<LogisticTerm>(&term_); }

  std::string Describe() const;

 private:
  Objective(int dimension, std::variant<PolynomialTerm, QuadraticTerm, LogisticTerm> term)
      : dimension_(dimension), term_(std::move(term)) {}

  void CheckDimension(const Point& x) const;

  int dimension_ = 0;
  std::variant<PolynomialTerm, QuadraticTerm, LogisticTerm> term_;
};

struct Constants {
  double L = 0.0;  // sup |grad f| on the set
  double N = 0.0;  // Lipschitz constant of grad f on the set
  // Largest values seen on a coarse grid and on a 10x finer grid; both must
  // stay below (L, N).
  double grid_L = 0.0;
  double grid_N = 0.0;
  double fine_grid_L = 0.0;
  double fine_grid_N = 0.0;
};

Constants EstimateConstants(const Objective& objective, const FeasibleSet& set);

// Exact for polynomials (minimum of every p_d'' on its interval) and
// quadratics (smallest eigenvalue); logistic loss is always convex.
bool IsConvexOn(const Objective& objective, const FeasibleSet& set, double tol = 1e-12);

class GlobalProblem {
 public:
  GlobalProblem(std::vector<Objective> objectives, FeasibleSet feasible);

  int num_agents() const { return static_cast<int>(objectives_.size()); }
  int dimension() const { return feasible_.dimension(); }
  const std::vector<Objective>& objectives() const { return objectives_; }
  const Objective& objective(AgentId j) const { return objectives_.at(j); }
  const FeasibleSet& feasible() const { return feasible_; }

  double Value(const Point& x) const;
  Point Gradient(const Point& x) const;
  bool AllPolynomial() const;

 private:
  std::vector<Objective> objectives_;
  FeasibleSet feasible_;
};

struct CentralSolution {
  Point x;
  double f = 0.0;            // f(x), an upper bound on the optimal value
  double lower_bound = 0.0;  // from the linearization at x over the box
  double mapping_norm = 0.0;
  int iterations = 0;
};

// Projected gradient descent with a backtracking step until
// |x - P(x - grad f(x))| < tolerance. In one dimension a grid plus ternary
// search also runs and the better point is kept.
CentralSolution SolveCentralized(const GlobalProblem& problem, double tolerance = 1e-10,
                                 int max_iterations = 200000);

// The polynomial problem f_1..f_5 on [-30, 30] used throughout the tests and
// presets.
GlobalProblem FivePolynomialProblem();

}  // namespace rss
