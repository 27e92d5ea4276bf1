#include "rss/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "rss/rng.hpp"

namespace rss {

namespace {

double Sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow.
double Softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double SpectralNorm(const Eigen::MatrixXd& symmetric) {
  if (symmetric.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetric, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd LogisticHessian(const LogisticTerm& t, const Point& w) {
  const int m = static_cast<int>(t.features.rows());
  Eigen::MatrixXd h = t.lambda * Eigen::MatrixXd::Identity(w.size(), w.size());
  for (int i = 0; i < m; ++i) {
    const double s = Sigmoid(t.labels[i] * t.features.row(i).dot(w));
    h += (s * (1.0 - s) / m) * t.features.row(i).transpose() * t.features.row(i);
  }
  return h;
}

// Calls visit(x) on a tensor grid with `per_dim` points per coordinate, or on
// `cap` seeded random points plus the box vertices when the grid is larger.
void VisitGrid(const FeasibleSet& set, int per_dim, long cap, const std::function<void(const Point&)>& visit) {
  const int d = set.dimension();
  const double total = std::pow(static_cast<double>(per_dim), d);
  if (total <= static_cast<double>(cap)) {
    std::vector<int> idx(d, 0);
    Point x(d);
    while (true) {
      for (int k = 0; k < d; ++k) {
        const double t = per_dim == 1 ? 0.5 : static_cast<double>(idx[k]) / (per_dim - 1);
        x[k] = set.lower()[k] + t * (set.upper()[k] - set.lower()[k]);
      }
      visit(x);
      int k = 0;
      while (k < d && ++idx[k] == per_dim) idx[k++] = 0;
      if (k == d) return;
    }
  }
  Stream rng(static_cast<std::uint64_t>(per_dim), StreamPurpose::kTrial, static_cast<std::uint64_t>(d), 0);
  Point x(d);
  for (long s = 0; s < cap; ++s) {
    for (int k = 0; k < d; ++k) x[k] = rng.Uniform(set.lower()[k], set.upper()[k]);
    visit(x);
  }
  if (d <= 20) {
    for (long mask = 0; mask < (1L << d); ++mask) {
      for (int k = 0; k < d; ++k) x[k] = (mask >> k & 1) ? set.upper()[k] : set.lower()[k];
      visit(x);
    }
  }
}

}  // namespace

FeasibleSet::FeasibleSet(Point lower, Point upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || lower_.size() == 0) {
    throw InvalidArgument("feasible box bounds must have equal, nonzero length");
  }
  for (Eigen::Index k = 0; k < lower_.size(); ++k) {
    if (!std::isfinite(lower_[k]) || !std::isfinite(upper_[k]) || lower_[k] > upper_[k]) {
      throw InvalidArgument("feasible box must be finite with lower <= upper");
    }
  }
}

FeasibleSet FeasibleSet::Cube(int dimension, double lo, double hi) {
  return FeasibleSet(Point::Constant(dimension, lo), Point::Constant(dimension, hi));
}

Point FeasibleSet::Project(const Point& z) const {
  if (z.size() != lower_.size()) throw InvalidArgument("dimension mismatch in projection");
  return z.cwiseMax(lower_).cwiseMin(upper_);
}

bool FeasibleSet::Contains(const Point& x, double tol) const {
  if (x.size() != lower_.size()) return false;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (!(x[k] >= lower_[k] - tol && x[k] <= upper_[k] + tol)) return false;
  }
  return true;
}

FeasibleSet FeasibleSet::Inflate(double margin) const {
  if (margin < 0.0) throw InvalidArgument("negative inflation margin");
  return FeasibleSet(lower_.array() - margin, upper_.array() + margin);
}

Objective Objective::Polynomial1D(std::vector<double> coefficients) {
  return FromPolynomial(SeparablePolynomial({Polynomial(std::move(coefficients))}));
}

Objective Objective::FromPolynomial(SeparablePolynomial poly) {
  if (poly.dimension() < 1) throw InvalidArgument("polynomial objective needs dimension >= 1");
  PolynomialTerm term{std::move(poly), {}};
  for (const auto& p : term.poly.parts()) term.derivatives.push_back(p.Derivative());
  const int dim = term.poly.dimension();
  return Objective(dim, std::move(term));
}

Objective Objective::Quadratic(Eigen::MatrixXd q, Eigen::VectorXd b, double c) {
  const auto d = b.size();
  if (d < 1 || q.rows() != d || q.cols() != d) throw InvalidArgument("quadratic shape mismatch");
  if ((q - q.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw InvalidArgument("quadratic matrix must be symmetric");
  return Objective(static_cast<int>(d), QuadraticTerm{std::move(q), std::move(b), c});
}

Objective Objective::Logistic(int dimension, std::uint64_t seed, int samples, double lambda) {
  if (dimension < 1 || samples < 1 || lambda < 0.0) throw InvalidArgument("bad logistic parameters");
  Stream rng(seed, StreamPurpose::kDataset, 0, 0);
  Point separator(dimension);
  for (int k = 0; k < dimension; ++k) separator[k] = rng.Normal();
  LogisticTerm t;
  t.features.resize(samples, dimension);
  t.labels.resize(samples);
  t.lambda = lambda;
  t.seed = seed;
  for (int i = 0; i < samples; ++i) {
    for (int k = 0; k < dimension; ++k) t.features(i, k) = rng.Normal();
    double label = t.features.row(i).dot(separator) >= 0.0 ? 1.0 : -1.0;
    if (rng.Uniform01() < 0.1) label = -label;
    t.labels[i] = label;
  }
  return Objective(dimension, std::move(t));
}

ObjectiveKind Objective::kind() const {
  switch (term_.index()) {
    case 0:
      return ObjectiveKind::kPolynomial;
    case 1:
      return ObjectiveKind::kQuadratic;
    default:
      return ObjectiveKind::kLogistic;
  }
}

const SeparablePolynomial* Objective::polynomial() const {
  const auto* t = std::get_if<PolynomialTerm>(&term_);
  return t ? &t->poly : nullptr;
}

void Objective::CheckDimension(const Point& x) const {
  if (x.size() != dimension_) {
    throw InvalidArgument("dimension mismatch: objective has D=" + std::to_string(dimension_) +
                          ", point has " + std::to_string(x.size()));
  }
}

double Objective::Value(const Point& x) const {
  CheckDimension(x);
  if (const auto* p = std::get_if<PolynomialTerm>(&term_)) return p->poly.Evaluate(x);
  if (const auto* q = std::get_if<QuadraticTerm>(&term_)) return 0.5 * x.dot(q->q * x) + q->b.dot(x) + q->c;
  const auto& t = std::get<LogisticTerm>(term_);
  const int m = static_cast<int>(t.features.rows());
  double acc = 0.0;
  for (int i = 0; i < m; ++i) acc += Softplus(-t.labels[i] * t.features.row(i).dot(x));
  return acc / m + 0.5 * t.lambda * x.squaredNorm();
}

Point Objective::Gradient(const Point& x) const {
  CheckDimension(x);
  if (const auto* p = std::get_if<PolynomialTerm>(&term_)) {
    Point g(dimension_);
    for (int d = 0; d < dimension_; ++d) g[d] = p->derivatives[d].Evaluate(x[d]);
    return g;
  }
  if (const auto* q = std::get_if<QuadraticTerm>(&term_)) return q->q * x + q->b;
  const auto& t = std::get<LogisticTerm>(term_);
  const int m = static_cast<int>(t.features.rows());
  Point g = t.lambda * x;
  for (int i = 0; i < m; ++i) {
    const double margin = t.labels[i] * t.features.row(i).dot(x);
    g -= (t.labels[i] * Sigmoid(-margin) / m) * t.features.row(i).transpose();
  }
  return g;
}

std::string Objective::Describe() const {
  std::ostringstream os;
  if (const auto* p = std::get_if<PolynomialTerm>(&term_)) {
    os << "polynomial";
    for (const auto& part : p->poly.parts()) os << " " << part.ToString();
  } else if (quadratic()) {
    os << "quadratic D=" << dimension_;
  } else {
    os << "logistic D=" << dimension_ << " seed=" << logistic()->seed;
  }
  return os.str();
}

Constants EstimateConstants(const Objective& objective, const FeasibleSet& set) {
  if (objective.dimension() != set.dimension()) throw InvalidArgument("dimension mismatch");
  Constants out;
  const int dim = set.dimension();

  if (const SeparablePolynomial* poly = objective.polynomial()) {
    double l2 = 0.0;
    for (int d = 0; d < dim; ++d) {
      const Polynomial d1 = poly->part(d).Derivative();
      const Polynomial d2 = d1.Derivative();
      const double lo = set.lower()[d];
      const double hi = set.upper()[d];
      const double m1 = d1.MaxAbsOn(lo, hi);
      l2 += m1 * m1;
      out.N = std::max(out.N, d2.MaxAbsOn(lo, hi));
    }
    out.L = std::sqrt(l2);
    // Separable: the grid maximum of |grad| factors per coordinate.
    for (int pass = 0; pass < 2; ++pass) {
      const int points = pass == 0 ? 1001 : 10001;
      double gl2 = 0.0;
      double gn = 0.0;
      for (int d = 0; d < dim; ++d) {
        const Polynomial d1 = poly->part(d).Derivative();
        const Polynomial d2 = d1.Derivative();
        double best1 = 0.0;
        for (int s = 0; s < points; ++s) {
          const double x = set.lower()[d] + (set.upper()[d] - set.lower()[d]) * s / (points - 1);
          best1 = std::max(best1, std::abs(d1.Evaluate(x)));
          gn = std::max(gn, std::abs(d2.Evaluate(x)));
        }
        gl2 += best1 * best1;
      }
      (pass == 0 ? out.grid_L : out.fine_grid_L) = std::sqrt(gl2);
      (pass == 0 ? out.grid_N : out.fine_grid_N) = gn;
    }
    return out;
  }

  if (const QuadraticTerm* q = objective.quadratic()) {
    if (dim > 20) throw InvalidArgument("quadratic constants limited to D <= 20");
    Point x(dim);
    for (long mask = 0; mask < (1L << dim); ++mask) {
      for (int k = 0; k < dim; ++k) x[k] = (mask >> k & 1) ? set.upper()[k] : set.lower()[k];
      out.L = std::max(out.L, (q->q * x + q->b).norm());
    }
    out.N = SpectralNorm(q->q);
  } else {
    const LogisticTerm& t = *objective.logistic();
    const int m = static_cast<int>(t.features.rows());
    double row_norms = 0.0;
    for (int i = 0; i < m; ++i) row_norms += t.features.row(i).norm();
    const double w_max = set.lower().cwiseAbs().cwiseMax(set.upper().cwiseAbs()).norm();
    out.L = row_norms / m + t.lambda * w_max;
    out.N = SpectralNorm(t.features.transpose() * t.features) / (4.0 * m) + t.lambda;
  }

  const int coarse = std::max(3, static_cast<int>(std::floor(std::pow(2000.0, 1.0 / dim))));
  const int fine = 10 * (coarse - 1) + 1;
  for (int pass = 0; pass < 2; ++pass) {
    double gl = 0.0;
    double gn = 0.0;
    VisitGrid(set, pass == 0 ? coarse : fine, 200000, [&](const Point& x) {
      gl = std::max(gl, objective.Gradient(x).norm());
      if (objective.quadratic()) {
        gn = out.N;
      } else {
        gn = std::max(gn, SpectralNorm(LogisticHessian(*objective.logistic(), x)));
      }
    });
    (pass == 0 ? out.grid_L : out.fine_grid_L) = gl;
    (pass == 0 ? out.grid_N : out.fine_grid_N) = gn;
  }
  return out;
}

bool IsConvexOn(const Objective& objective, const FeasibleSet& set, double tol) {
  if (const SeparablePolynomial* poly = objective.polynomial()) {
    for (int d = 0; d < poly->dimension(); ++d) {
      const Polynomial d2 = poly->part(d).Derivative().Derivative();
      if (d2.MinOn(set.lower()[d], set.upper()[d]) < -tol) return false;
    }
    return true;
  }
  if (const QuadraticTerm* q = objective.quadratic()) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q->q, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff() >= -tol;
  }
  return objective.logistic()->lambda >= 0.0;
}

GlobalProblem::GlobalProblem(std::vector<Objective> objectives, FeasibleSet feasible)
    : objectives_(std::move(objectives)), feasible_(std::move(feasible)) {
  if (objectives_.empty()) throw InvalidArgument("problem needs at least one objective");
  for (const auto& o : objectives_) {
    if (o.dimension() != feasible_.dimension()) throw InvalidArgument("objective dimension differs from feasible set");
  }
}

double GlobalProblem::Value(const Point& x) const {
  double acc = 0.0;
  for (const auto& o : objectives_) acc += o.Value(x);
  return acc;
}

Point GlobalProblem::Gradient(const Point& x) const {
  Point g = Point::Zero(dimension());
  for (const auto& o : objectives_) g += o.Gradient(x);
  return g;
}

bool GlobalProblem::AllPolynomial() const {
  return std::all_of(objectives_.begin(), objectives_.end(),
                     [](const Objective& o) { return o.kind() == ObjectiveKind::kPolynomial; });
}

namespace {

double LinearLowerBound(const GlobalProblem& problem, const Point& x, double fx) {
  const Point g = problem.Gradient(x);
  const FeasibleSet& box = problem.feasible();
  double lb = fx;
  for (int d = 0; d < box.dimension(); ++d) {
    lb += std::min(g[d] * (box.lower()[d] - x[d]), g[d] * (box.upper()[d] - x[d]));
  }
  return lb;
}

// Grid scan followed by ternary search in the bracketing cells; assumes a
// convex function of one variable.
Point TernaryRefine(const GlobalProblem& problem) {
  const double lo = problem.feasible().lower()[0];
  const double hi = problem.feasible().upper()[0];
  auto f = [&](double t) { return problem.Value(Point::Constant(1, t)); };
  const int cells = 2000;
  int best = 0;
  double best_f = f(lo);
  for (int s = 1; s <= cells; ++s) {
    const double v = f(lo + (hi - lo) * s / cells);
    if (v < best_f) {
      best_f = v;
      best = s;
    }
  }
  double a = lo + (hi - lo) * std::max(0, best - 1) / cells;
  double b = lo + (hi - lo) * std::min(cells, best + 1) / cells;
  for (int it = 0; it < 300 && b - a > 0.0; ++it) {
    const double m1 = a + (b - a) / 3.0;
    const double m2 = b - (b - a) / 3.0;
    if (m1 <= a || m2 >= b) break;
    if (f(m1) <= f(m2)) {
      b = m2;
    } else {
      a = m1;
    }
  }
  return Point::Constant(1, 0.5 * (a + b));
}

}  // namespace

CentralSolution SolveCentralized(const GlobalProblem& problem, double tolerance, int max_iterations) {
  if (!(tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
  const FeasibleSet& box = problem.feasible();
  Point x = box.Center();
  double fx = problem.Value(x);
  double step = 1.0;
  CentralSolution sol;
  int it = 0;
  for (; it < max_iterations; ++it) {
    const Point g = problem.Gradient(x);
    const double mapping = (x - box.Project(x - g)).norm();
    if (mapping < tolerance) break;
    step = std::min(step * 2.0, 1e6);
    while (true) {
      const Point next = box.Project(x - step * g);
      const Point diff = next - x;
      const double fn = problem.Value(next);
      // Near the optimum f differences drop below rounding; the secant
      // curvature test on gradients still resolves the step there.
      const double rounding = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(fx));
      const bool decrease = fn <= fx + g.dot(diff) + diff.squaredNorm() / (2.0 * step);
      const bool curvature =
          fn <= fx + rounding && step * (problem.Gradient(next) - g).norm() <= diff.norm();
      if (decrease || curvature || step < 1e-300) {
        x = next;
        fx = fn;
        break;
      }
      step *= 0.5;
    }
  }
  if (it == max_iterations) {
    throw ConvergenceError("centralized solver did not reach tolerance within " +
                           std::to_string(max_iterations) + " iterations");
  }
  sol.iterations = it;
  if (box.dimension() == 1) {
    const Point t = TernaryRefine(problem);
    const double ft = problem.Value(t);
    if (ft < fx) {
      x = t;
      fx = ft;
    }
  }
  sol.x = x;
  sol.f = fx;
  sol.mapping_norm = (x - box.Project(x - problem.Gradient(x))).norm();
  sol.lower_bound = LinearLowerBound(problem, x, fx);
  return sol;
}

GlobalProblem FivePolynomialProblem() {
  std::vector<Objective> objs{
      Objective::Polynomial1D({0, 0, 1}),          // x^2
      Objective::Polynomial1D({0, 0, 0, 0, 1}),    // x^4
      Objective::Polynomial1D({0, 0, 1, 0, 1}),    // x^2 + x^4
      Objective::Polynomial1D({0, 0, 1, 0, 0.5}),  // x^2 + 0.5 x^4
      Objective::Polynomial1D({0, 0, 0.5, 0, 1}),  // 0.5 x^2 + x^4
  };
  return GlobalProblem(std::move(objs), FeasibleSet::Cube(1, -30.0, 30.0));
}

}  // namespace rss
