#pragma once

#include <Eigen/Dense>

#include <vector>

namespace stdg {

using Vec2 = Eigen::Vector2d;

/// Univariate polynomial in monomial form, c[i] * t^i.
class Poly1 {
 public:
  Poly1() = default;
  explicit Poly1(std::vector<double> coeffs) : c_(std::move(coeffs)) {}

  static Poly1 constant(double value) { return Poly1({value}); }
  /// a + b t
  static Poly1 linear(double a, double b) { return Poly1({a, b}); }

  int degree() const { return static_cast<int>(c_.size()) - 1; }
  const std::vector<double>& coeffs() const { return c_; }

  double operator()(double t) const;
  Poly1 derivative() const;
  /// Exact integral over [0, 1].
  double integrate01() const;

  Poly1 operator*(const Poly1& o) const;
  Poly1 operator+(const Poly1& o) const;
  Poly1 operator*(double s) const;

 private:
  std::vector<double> c_;
};

/// Bivariate polynomial in monomial form, sum c(i,j) xi^i eta^j with i+j <= degree.
class Poly2 {
 public:
  Poly2() : Poly2(0) {}
  explicit Poly2(int degree);

  static Poly2 constant(double value);
  /// a0 + a1 xi + a2 eta
  static Poly2 affine(double a0, double a1, double a2);
  static Poly2 monomial(int i, int j);

  int degree() const { return deg_; }
  double coeff(int i, int j) const;
  double& coeff(int i, int j);

  double operator()(double xi, double eta) const;
  double operator()(const Vec2& x) const { return (*this)(x.x(), x.y()); }

  Poly2 d_xi() const;
  Poly2 d_eta() const;

  Poly2 operator*(const Poly2& o) const;
  Poly2 operator+(const Poly2& o) const;
  Poly2 operator-(const Poly2& o) const;
  Poly2 operator*(double s) const;

  /// Substitute xi -> x(s, t), eta -> y(s, t) for affine x, y.
  Poly2 compose(const Poly2& x, const Poly2& y) const;

  /// Restriction to the segment from a to b, parametrised by t in [0, 1].
  Poly1 restrict_to_segment(const Vec2& a, const Vec2& b) const;

  /// Exact integral over the reference triangle {xi, eta >= 0, xi + eta <= 1}.
  double integrate_reference_triangle() const;

 private:
  int index(int i, int j) const { return i * (deg_ + 1) + j; }

  int deg_;
  std::vector<double> c_;
};

}  // namespace stdg
