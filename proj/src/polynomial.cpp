#include "stdg/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace stdg {

double Poly1::operator()(double t) const {
  double r = 0.0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = r * t + *it;
  return r;
}

Poly1 Poly1::derivative() const {
  if (c_.size() <= 1) return Poly1::constant(0.0);
  std::vector<double> d(c_.size() - 1);
  for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = static_cast<double>(i) * c_[i];
  return Poly1(std::move(d));
}

double Poly1::integrate01() const {
  double r = 0.0;
  for (std::size_t i = 0; i < c_.size(); ++i) r += c_[i] / static_cast<double>(i + 1);
  return r;
}

Poly1 Poly1::operator*(const Poly1& o) const {
  if (c_.empty() || o.c_.empty()) return Poly1::constant(0.0);
  std::vector<double> r(c_.size() + o.c_.size() - 1, 0.0);
  for (std::size_t i = 0; i < c_.size(); ++i)
    for (std::size_t j = 0; j < o.c_.size(); ++j) r[i + j] += c_[i] * o.c_[j];
  return Poly1(std::move(r));
}

Poly1 Poly1::operator+(const Poly1& o) const {
  std::vector<double> r(std::max(c_.size(), o.c_.size()), 0.0);
  for (std::size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
  for (std::size_t i = 0; i < o.c_.size(); ++i) r[i] += o.c_[i];
  return Poly1(std::move(r));
}

Poly1 Poly1::operator*(double s) const {
  std::vector<double> r = c_;
  for (auto& v : r) v *= s;
  return Poly1(std::move(r));
}

Poly2::Poly2(int degree) : deg_(degree), c_((degree + 1) * (degree + 1), 0.0) {
  if (degree < 0) throw std::invalid_argument("Poly2: negative degree");
}

Poly2 Poly2::constant(double value) {
  Poly2 p(0);
  p.coeff(0, 0) = value;
  return p;
}

Poly2 Poly2::affine(double a0, double a1, double a2) {
  Poly2 p(1);
  p.coeff(0, 0) = a0;
  p.coeff(1, 0) = a1;
  p.coeff(0, 1) = a2;
  return p;
}

Poly2 Poly2::monomial(int i, int j) {
  Poly2 p(i + j);
  p.coeff(i, j) = 1.0;
  return p;
}

double Poly2::coeff(int i, int j) const {
  if (i < 0 || j < 0 || i + j > deg_) return 0.0;
  return c_[index(i, j)];
}

double& Poly2::coeff(int i, int j) {
  if (i < 0 || j < 0 || i + j > deg_) throw std::out_of_range("Poly2::coeff");
  return c_[index(i, j)];
}

double Poly2::operator()(double xi, double eta) const {
  // Horner in eta for each power of xi.
  double r = 0.0;
  for (int i = deg_; i >= 0; --i) {
    double row = 0.0;
    for (int j = deg_ - i; j >= 0; --j) row = row * eta + c_[index(i, j)];
    r = r * xi + row;
  }
  return r;
}

Poly2 Poly2::d_xi() const {
  Poly2 r(std::max(deg_ - 1, 0));
  for (int i = 1; i <= deg_; ++i)
    for (int j = 0; i + j <= deg_; ++j) r.coeff(i - 1, j) = i * coeff(i, j);
  return r;
}

Poly2 Poly2::d_eta() const {
  Poly2 r(std::max(deg_ - 1, 0));
  for (int i = 0; i <= deg_; ++i)
    for (int j = 1; i + j <= deg_; ++j) r.coeff(i, j - 1) = j * coeff(i, j);
  return r;
}

Poly2 Poly2::operator*(const Poly2& o) const {
  Poly2 r(deg_ + o.deg_);
  for (int i = 0; i <= deg_; ++i)
    for (int j = 0; i + j <= deg_; ++j) {
      const double a = coeff(i, j);
      if (a == 0.0) continue;
      for (int k = 0; k <= o.deg_; ++k)
        for (int l = 0; k + l <= o.deg_; ++l) r.coeff(i + k, j + l) += a * o.coeff(k, l);
    }
  return r;
}

Poly2 Poly2::operator+(const Poly2& o) const {
  Poly2 r(std::max(deg_, o.deg_));
  for (int i = 0; i <= r.deg_; ++i)
    for (int j = 0; i + j <= r.deg_; ++j) r.coeff(i, j) = coeff(i, j) + o.coeff(i, j);
  return r;
}

Poly2 Poly2::operator-(const Poly2& o) const { return *this + o * -1.0; }

Poly2 Poly2::operator*(double s) const {
  Poly2 r = *this;
  for (auto& v : r.c_) v *= s;
  return r;
}

Poly2 Poly2::compose(const Poly2& x, const Poly2& y) const {
  if (x.degree() > 1 || y.degree() > 1) throw std::invalid_argument("Poly2::compose expects affine maps");
  std::vector<Poly2> xpow{Poly2::constant(1.0)}, ypow{Poly2::constant(1.0)};
  for (int k = 1; k <= deg_; ++k) {
    xpow.push_back(xpow.back() * x);
    ypow.push_back(ypow.back() * y);
  }
  Poly2 r(deg_);
  for (int i = 0; i <= deg_; ++i)
    for (int j = 0; i + j <= deg_; ++j) {
      const double a = coeff(i, j);
      if (a == 0.0) continue;
      r = r + xpow[i] * ypow[j] * a;
    }
  return r;
}

Poly1 Poly2::restrict_to_segment(const Vec2& a, const Vec2& b) const {
  const Poly1 x = Poly1::linear(a.x(), b.x() - a.x());
  const Poly1 y = Poly1::linear(a.y(), b.y() - a.y());
  std::vector<Poly1> xpow{Poly1::constant(1.0)}, ypow{Poly1::constant(1.0)};
  for (int k = 1; k <= deg_; ++k) {
    xpow.push_back(xpow.back() * x);
    ypow.push_back(ypow.back() * y);
  }
  Poly1 r = Poly1::constant(0.0);
  for (int i = 0; i <= deg_; ++i)
    for (int j = 0; i + j <= deg_; ++j) {
      const double c = coeff(i, j);
      if (c != 0.0) r = r + xpow[i] * ypow[j] * c;
    }
  return r;
}

double Poly2::integrate_reference_triangle() const {
  // int xi^i eta^j = i! j! / (i + j + 2)!
  std::vector<double> fact(2 * deg_ + 3, 1.0);
  for (std::size_t k = 1; k < fact.size(); ++k) fact[k] = fact[k - 1] * static_cast<double>(k);
  double r = 0.0;
  for (int i = 0; i <= deg_; ++i)
    for (int j = 0; i + j <= deg_; ++j) r += coeff(i, j) * fact[i] * fact[j] / fact[i + j + 2];
  return r;
}

}  // namespace stdg
