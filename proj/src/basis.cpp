#include "stdg/basis.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace stdg {

void DiscretizationOrder::validate() const {
  if (p < 1) throw std::invalid_argument("spatial degree p must be >= 1 (got " + std::to_string(p) + ")");
  if (p > kMaxSpatialDegree)
    throw std::invalid_argument("spatial degree p = " + std::to_string(p) + " exceeds the degree cap " +
                                std::to_string(kMaxSpatialDegree));
  if (p_gamma < 0) throw std::invalid_argument("temporal degree p_gamma must be >= 0");
  if (p_gamma > kMaxTemporalDegree)
    throw std::invalid_argument("temporal degree p_gamma = " + std::to_string(p_gamma) +
                                " exceeds the degree cap " + std::to_string(kMaxTemporalDegree));
}

std::vector<Vec2> triangle_nodes(int p) {
  if (p < 1) throw std::invalid_argument("triangle_nodes: p must be >= 1 (p = 0 has no staggered coupling)");
  if (p > kMaxSpatialDegree) throw std::invalid_argument("triangle_nodes: p exceeds the degree cap");
  std::vector<Vec2> nodes;
  for (int k2 = 0; k2 <= p; ++k2)
    for (int k1 = 0; k1 <= p - k2; ++k1) nodes.emplace_back(static_cast<double>(k1) / p, static_cast<double>(k2) / p);
  return nodes;
}

namespace {

// Factor a_k(l) = prod_{m<k} (p l - m) / (m + 1) of the equidistant Lagrange
// basis in barycentric form, which vanishes at l = m/p for m < k and is 1 at k/p.
Poly2 barycentric_factor(int p, int k, const Poly2& lambda) {
  Poly2 f = Poly2::constant(1.0);
  for (int m = 0; m < k; ++m) f = f * (lambda * (static_cast<double>(p) / (m + 1)) + Poly2::constant(-m / (m + 1.0)));
  return f;
}

}  // namespace

TriangleBasis::TriangleBasis(int p) : p_(p), nodes_(triangle_nodes(p)) {
  const std::array<Poly2, 3> lambda{Poly2::affine(0.0, 1.0, 0.0), Poly2::affine(0.0, 0.0, 1.0),
                                    Poly2::affine(1.0, -1.0, -1.0)};
  for (int k2 = 0; k2 <= p; ++k2)
    for (int k1 = 0; k1 + k2 <= p; ++k1) {
      const std::array<int, 3> k{k1, k2, p - k1 - k2};
      exponents_.push_back(k);
      Poly2 f = Poly2::constant(1.0);
      for (int i = 0; i < 3; ++i) f = f * barycentric_factor(p, k[i], lambda[i]);
      funcs_.push_back(f);
    }
}

int TriangleBasis::node_index(int k1, int k2) const {
  if (k1 < 0 || k2 < 0 || k1 + k2 > p_) throw std::out_of_range("TriangleBasis::node_index");
  // rows k2' < k2 hold (p - k2' + 1) nodes each
  return k2 * (p_ + 1) - k2 * (k2 - 1) / 2 + k1;
}

std::vector<int> TriangleBasis::edge_nodes(int e) const {
  std::vector<int> idx(p_ + 1);
  for (int c = 0; c <= p_; ++c) {
    switch (e) {
      case 0: idx[c] = node_index(c, 0); break;
      case 1: idx[c] = node_index(p_ - c, c); break;
      case 2: idx[c] = node_index(0, p_ - c); break;
      default: throw std::out_of_range("TriangleBasis::edge_nodes");
    }
  }
  return idx;
}

BasisValues TriangleBasis::eval(const Vec2& x) const {
  constexpr double tol = 1e-12;
  if (x.x() < -tol || x.y() < -tol || x.x() + x.y() > 1.0 + tol)
    throw std::domain_error("point outside the reference triangle");
  return eval_unchecked(x);
}

BasisValues TriangleBasis::eval_unchecked(const Vec2& x) const {
  // factor values and derivatives for every k <= p and barycentric coordinate
  const std::array<double, 3> lambda{x.x(), x.y(), 1.0 - x.x() - x.y()};
  Eigen::MatrixXd a(3, p_ + 1), da(3, p_ + 1);
  for (int i = 0; i < 3; ++i) {
    a(i, 0) = 1.0;
    da(i, 0) = 0.0;
    for (int m = 0; m < p_; ++m) {
      const double factor = (p_ * lambda[i] - m) / (m + 1);
      a(i, m + 1) = a(i, m) * factor;
      da(i, m + 1) = da(i, m) * factor + a(i, m) * p_ / (m + 1);
    }
  }
  const int n = size();
  BasisValues r{Eigen::VectorXd(n), GradientTable(n, 2)};
  for (int k = 0; k < n; ++k) {
    const auto& e = exponents_[k];
    const double v0 = a(0, e[0]), v1 = a(1, e[1]), v2 = a(2, e[2]);
    r.values[k] = v0 * v1 * v2;
    const double d2 = v0 * v1 * da(2, e[2]);
    r.gradients(k, 0) = da(0, e[0]) * v1 * v2 - d2;
    r.gradients(k, 1) = v0 * da(1, e[1]) * v2 - d2;
  }
  return r;
}

SquareBasis::SquareBasis(int p) : p_(p), tri_(p) {
  const TriangleBasis& tri = tri_;
  const int n = size();
  for (int h = 0; h < 2; ++h) {
    local_[h].assign(n, -1);
    square_[h].assign(tri.size(), -1);
    pieces_[h].assign(n, Poly2(0));
  }
  for (int j = 0; j <= p; ++j)
    for (int i = 0; i <= p; ++i) nodes_.emplace_back(static_cast<double>(i) / p, static_cast<double>(j) / p);

  // Half 1 local coordinates: (1 - xi, 1 - eta).
  const Poly2 flip_x = Poly2::affine(1.0, -1.0, 0.0);
  const Poly2 flip_y = Poly2::affine(1.0, 0.0, -1.0);
  for (int j = 0; j <= p; ++j)
    for (int i = 0; i <= p; ++i) {
      const int k = j * (p + 1) + i;
      if (i + j <= p) {
        const int m = tri.node_index(i, j);
        local_[0][k] = m;
        square_[0][m] = k;
        pieces_[0][k] = tri.function(m);
      }
      if (i + j >= p) {
        const int m = tri.node_index(p - i, p - j);
        local_[1][k] = m;
        square_[1][m] = k;
        pieces_[1][k] = tri.function(m).compose(flip_x, flip_y);
      }
    }
}

BasisValues SquareBasis::eval(const Vec2& x, Side side) const {
  constexpr double tol = 1e-12;
  if (x.x() < -tol || x.y() < -tol || x.x() > 1.0 + tol || x.y() > 1.0 + tol)
    throw std::domain_error("point outside the reference square");
  int h = (x.x() + x.y() <= 1.0) ? 0 : 1;
  if (side == Side::lower) h = 0;
  if (side == Side::upper) h = 1;
  const double s = x.x() + x.y();
  if ((h == 0 && s > 1.0 + tol) || (h == 1 && s < 1.0 - tol))
    throw std::domain_error("forced sub-triangle does not contain the point");
  const BasisValues local = tri_.eval_unchecked(to_local(h, x));
  const double sign = h == 0 ? 1.0 : -1.0;  // d(local)/dx = -I on T_II
  const int n = size();
  BasisValues r{Eigen::VectorXd::Zero(n), GradientTable::Zero(n, 2)};
  for (int m = 0; m < tri_.size(); ++m) {
    const int k = square_[h][m];
    r.values[k] = local.values[m];
    r.gradients.row(k) = sign * local.gradients.row(m);
  }
  return r;
}

TemporalBasis::TemporalBasis(int p_gamma) : pg_(p_gamma) {
  if (p_gamma < 0 || p_gamma > kMaxTemporalDegree)
    throw std::invalid_argument("TemporalBasis: p_gamma outside [0, " + std::to_string(kMaxTemporalDegree) + "]");
  if (p_gamma == 0) {
    nodes_ = {1.0};
    funcs_ = {Poly1::constant(1.0)};
    return;
  }
  for (int k = 0; k <= p_gamma; ++k) nodes_.push_back(static_cast<double>(k) / p_gamma);
  for (int k = 0; k <= p_gamma; ++k) {
    Poly1 f = Poly1::constant(1.0);
    for (int l = 0; l <= p_gamma; ++l) {
      if (l == k) continue;
      const double denom = nodes_[k] - nodes_[l];
      f = f * Poly1::linear(-nodes_[l] / denom, 1.0 / denom);
    }
    funcs_.push_back(f);
  }
}

TemporalBasis::Values TemporalBasis::eval(double tau) const {
  Values r{Eigen::VectorXd(size()), Eigen::VectorXd(size())};
  for (int k = 0; k < size(); ++k) {
    r.values[k] = funcs_[k](tau);
    r.derivatives[k] = funcs_[k].derivative()(tau);
  }
  return r;
}

SpaceTimeValues eval_spacetime_basis(const DiscretizationOrder& order, ElementKind kind, const Vec2& x,
                                     double tau, SquareBasis::Side side) {
  order.validate();
  const BasisValues s =
      kind == ElementKind::triangle ? TriangleBasis(order.p).eval(x) : SquareBasis(order.p).eval(x, side);
  const auto t = TemporalBasis(order.p_gamma).eval(tau);
  const int ns = static_cast<int>(s.values.size());
  const int ng = order.n_gamma();
  SpaceTimeValues r{Eigen::VectorXd(ns * ng), GradientTable(ns * ng, 2), Eigen::VectorXd(ns * ng)};
  for (int a = 0; a < ns; ++a)
    for (int b = 0; b < ng; ++b) {
      const int k = a * ng + b;
      r.values[k] = s.values[a] * t.values[b];
      r.gradients.row(k) = s.gradients.row(a) * t.values[b];
      r.time_derivatives[k] = s.values[a] * t.derivatives[b];
    }
  return r;
}

}  // namespace stdg
