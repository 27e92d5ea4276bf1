#include "rss/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rss/types.hpp"

namespace rss {

namespace {

void CheckInterval(double lo, double hi) {
  if (!(lo <= hi)) throw InvalidArgument("empty interval");
}

double Bisect(const Polynomial& p, double a, double b) {
  double fa = p.Evaluate(a);
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    if (m <= a || m >= b) break;
    const double fm = p.Evaluate(m);
    if (fm == 0.0) return m;
    if ((fm < 0.0) == (fa < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

Polynomial Polynomial::Monomial(int power, double scale) {
  if (power < 0) throw InvalidArgument("negative monomial power");
  Polynomial p = Zero(power + 1);
  p.c_[power] = scale;
  return p;
}

void Polynomial::set_coefficient(int power, double value) {
  if (power < 0) throw InvalidArgument("negative power");
  if (power >= size()) c_.resize(power + 1, 0.0);
  c_[power] = value;
}

int Polynomial::Degree() const {
  for (int k = size() - 1; k >= 0; --k)
    if (c_[k] != 0.0) return k;
  return -1;
}

double Polynomial::Evaluate(double x) const {
  const int deg = Degree();
  if (deg < 0) return 0.0;
  double acc = c_[deg];
  for (int k = deg - 1; k >= 0; --k) acc = acc * x + c_[k];
  return acc;
}

Polynomial Polynomial::Derivative() const {
  if (size() <= 1) return Zero(std::max(0, size() - 1));
  std::vector<double> d(size() - 1);
  for (int k = 1; k < size(); ++k) d[k - 1] = k * c_[k];
  return Polynomial(std::move(d));
}

Polynomial Polynomial::Resized(int n) const {
  if (n < 0) throw InvalidArgument("negative size");
  if (Degree() >= n) throw InvalidArgument("resize would drop nonzero coefficients");
  std::vector<double> out(c_);
  out.resize(n, 0.0);
  return Polynomial(std::move(out));
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  if (other.size() > size()) c_.resize(other.size(), 0.0);
  for (int k = 0; k < other.size(); ++k) c_[k] += other.c_[k];
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  if (other.size() > size()) c_.resize(other.size(), 0.0);
  for (int k = 0; k < other.size(); ++k) c_[k] -= other.c_[k];
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  for (double& v : c_) v *= s;
  return *this;
}

double Polynomial::MaxCoefficientGap(const Polynomial& a, const Polynomial& b) {
  const int n = std::max(a.size(), b.size());
  double gap = 0.0;
  for (int k = 0; k < n; ++k) gap = std::max(gap, std::abs(a.coefficient(k) - b.coefficient(k)));
  return gap;
}

std::vector<double> Polynomial::RootsIn(double lo, double hi) const {
  CheckInterval(lo, hi);
  const int deg = Degree();
  std::vector<double> roots;
  if (deg < 0) throw InvalidArgument("zero polynomial has no isolated roots");
  if (deg == 0) return roots;

  std::vector<double> knots{lo};
  for (double r : Derivative().RootsIn(lo, hi))
    if (r > lo && r < hi) knots.push_back(r);
  knots.push_back(hi);

  auto push = [&](double r) {
    if (roots.empty() || r > roots.back()) roots.push_back(r);
  };
  for (size_t s = 0; s + 1 < knots.size(); ++s) {
    const double a = knots[s];
    const double b = knots[s + 1];
    const double fa = Evaluate(a);
    const double fb = Evaluate(b);
    if (fa == 0.0) push(a);
    if (fa != 0.0 && fb != 0.0 && (fa < 0.0) != (fb < 0.0)) push(Bisect(*this, a, b));
    if (s + 2 == knots.size() && fb == 0.0) push(b);
  }
  return roots;
}

double Polynomial::MaxOn(double lo, double hi) const {
  CheckInterval(lo, hi);
  double best = std::max(Evaluate(lo), Evaluate(hi));
  const Polynomial d = Derivative();
  if (d.Degree() >= 1) {
    for (double r : d.RootsIn(lo, hi)) best = std::max(best, Evaluate(r));
  }
  return best;
}

double Polynomial::MinOn(double lo, double hi) const { return -((-*this).MaxOn(lo, hi)); }

double Polynomial::MaxAbsOn(double lo, double hi) const {
  return std::max(std::abs(MaxOn(lo, hi)), std::abs(MinOn(lo, hi)));
}

std::string Polynomial::ToString() const {
  std::ostringstream os;
  os.precision(17);
  os << "[";
  for (int k = 0; k < size(); ++k) os << (k ? ", " : "") << c_[k];
  os << "]";
  return os.str();
}

SeparablePolynomial SeparablePolynomial::Zero(int dimension, int num_coefficients) {
  return SeparablePolynomial(std::vector<Polynomial>(dimension, Polynomial::Zero(num_coefficients)));
}

int SeparablePolynomial::Degree() const {
  int deg = -1;
  for (const auto& p : parts_) deg = std::max(deg, p.Degree());
  return deg;
}

double SeparablePolynomial::Evaluate(const Eigen::VectorXd& x) const {
  if (x.size() != dimension()) throw InvalidArgument("dimension mismatch in polynomial evaluation");
  double acc = 0.0;
  for (int d = 0; d < dimension(); ++d) acc += parts_[d].Evaluate(x[d]);
  return acc;
}

Eigen::VectorXd SeparablePolynomial::Gradient(const Eigen::VectorXd& x) const {
  if (x.size() != dimension()) throw InvalidArgument("dimension mismatch in polynomial gradient");
  Eigen::VectorXd g(dimension());
  for (int d = 0; d < dimension(); ++d) g[d] = parts_[d].Derivative().Evaluate(x[d]);
  return g;
}

SeparablePolynomial SeparablePolynomial::Resized(int n) const {
  std::vector<Polynomial> out;
  out.reserve(parts_.size());
  for (const auto& p : parts_) out.push_back(p.Resized(n));
  return SeparablePolynomial(std::move(out));
}

SeparablePolynomial& SeparablePolynomial::operator+=(const SeparablePolynomial& other) {
  if (other.dimension() != dimension()) throw InvalidArgument("dimension mismatch in polynomial sum");
  for (int d = 0; d < dimension(); ++d) parts_[d] += other.parts_[d];
  return *this;
}

SeparablePolynomial& SeparablePolynomial::operator-=(const SeparablePolynomial& other) {
  if (other.dimension() != dimension()) throw InvalidArgument("dimension mismatch in polynomial sum");
  for (int d = 0; d < dimension(); ++d) parts_[d] -= other.parts_[d];
  return *this;
}

double SeparablePolynomial::MaxCoefficientGap(const SeparablePolynomial& a,
                                              const SeparablePolynomial& b) {
  if (a.dimension() != b.dimension()) throw InvalidArgument("dimension mismatch");
  double gap = 0.0;
  for (int d = 0; d < a.dimension(); ++d)
    gap = std::max(gap, Polynomial::MaxCoefficientGap(a.part(d), b.part(d)));
  return gap;
}

}  // namespace rss
