#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace rss {

// Univariate real polynomial, dense coefficients, constant term first.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<double> coefficients) : c_(std::move(coefficients)) {}

  static Polynomial Zero(int num_coefficients = 0) {
    return Polynomial(std::vector<double>(num_coefficients, 0.0));
  }
  static Polynomial Monomial(int power, double scale = 1.0);

  const std::vector<double>& coefficients() const { return c_; }
  // Number of stored coefficients (may exceed degree + 1).
  int size() const { return static_cast<int>(c_.size()); }
  double coefficient(int power) const { return power < size() ? c_[power] : 0.0; }
  void set_coefficient(int power, double value);

  // Highest index with a nonzero coefficient; -1 for the zero polynomial.
  int Degree() const;
  bool IsZero() const { return Degree() < 0; }

  // Horner's rule starting from the highest nonzero coefficient, so padding
  // with zeros never changes the floating point result.
  double Evaluate(double x) const;
  Polynomial Derivative() const;

  // Copy padded or truncated to `n` coefficients; truncation must only drop
  // zeros.
  Polynomial Resized(int n) const;

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(double s);
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, double s) { return a *= s; }
  friend Polynomial operator*(double s, Polynomial a) { return a *= s; }
  Polynomial operator-() const { return *this * -1.0; }

  // Largest |coefficient difference| treating missing entries as zero.
  static double MaxCoefficientGap(const Polynomial& a, const Polynomial& b);

  // Distinct real roots inside [lo, hi], ascending. Roots are isolated
  // between consecutive critical points (roots of the derivative) and refined
  // by bisection.
  std::vector<double> RootsIn(double lo, double hi) const;

  // Exact extrema on [lo, hi]: endpoints plus interior critical points.
  double MaxOn(double lo, double hi) const;
  double MinOn(double lo, double hi) const;
  double MaxAbsOn(double lo, double hi) const;

  std::string ToString() const;

 private:
  std::vector<double> c_;
};

// f(x) = sum_d p_d(x_d). One univariate part per coordinate; D = 1 is the
// plain univariate case.
class SeparablePolynomial {
 public:
  SeparablePolynomial() = default;
  explicit SeparablePolynomial(std::vector<Polynomial> parts) : parts_(std::move(parts)) {}

  static SeparablePolynomial Zero(int dimension, int num_coefficients);

  int dimension() const { return static_cast<int>(parts_.size()); }
  const std::vector<Polynomial>& parts() const { return parts_; }
  std::vector<Polynomial>& parts() { return parts_; }
  const Polynomial& part(int d) const { return parts_.at(d); }

  int Degree() const;
  double Evaluate(const Eigen::VectorXd& x) const;
  Eigen::VectorXd Gradient(const Eigen::VectorXd& x) const;

  SeparablePolynomial Resized(int n) const;

  SeparablePolynomial& operator+=(const SeparablePolynomial& other);
  SeparablePolynomial& operator-=(const SeparablePolynomial& other);
  friend SeparablePolynomial operator+(SeparablePolynomial a, const SeparablePolynomial& b) {
    return a += b;
  }
  friend SeparablePolynomial operator-(SeparablePolynomial a, const SeparablePolynomial& b) {
    return a -= b;
  }

  static double MaxCoefficientGap(const SeparablePolynomial& a, const SeparablePolynomial& b);

 private:
  std::vector<Polynomial> parts_;
};

}  // namespace rss
