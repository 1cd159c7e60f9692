#pragma once

#include "stdg/polynomial.hpp"

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace stdg {

inline constexpr int kMaxSpatialDegree = 4;
inline constexpr int kMaxTemporalDegree = 4;

/// Spatial degree p (pressure and velocity) and temporal degree p_gamma.
struct DiscretizationOrder {
  int p = 2;
  int p_gamma = 2;

  int n_phi() const { return (p + 1) * (p + 2) / 2; }
  int n_psi() const { return (p + 1) * (p + 1); }
  int n_gamma() const { return p_gamma + 1; }
  int n_phi_st() const { return n_phi() * n_gamma(); }
  int n_psi_st() const { return n_psi() * n_gamma(); }

  /// Throws std::invalid_argument naming the violated cap.
  void validate() const;
};

using GradientTable = Eigen::Matrix<double, Eigen::Dynamic, 2>;

struct BasisValues {
  Eigen::VectorXd values;
  GradientTable gradients;  // row k = (d/dxi, d/deta) of function k
};

/// Equidistant nodes (k1/p, k2/p), 0 <= k1, 0 <= k2 <= p - k1. Ordered with k2
/// as the outer loop, so p = 1 gives (0,0), (1,0), (0,1).
std::vector<Vec2> triangle_nodes(int p);

/// Nodal Lagrange basis of degree p on the reference triangle.
class TriangleBasis {
 public:
  explicit TriangleBasis(int p);

  int degree() const { return p_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  const std::vector<Vec2>& nodes() const { return nodes_; }
  const Poly2& function(int k) const { return funcs_[k]; }
  const std::vector<Poly2>& functions() const { return funcs_; }

  /// Index of node (k1/p, k2/p).
  int node_index(int k1, int k2) const;
  /// The p+1 node indices along local edge e, from vertex e to vertex e+1.
  std::vector<int> edge_nodes(int e) const;

  /// Throws std::domain_error for points outside the triangle (tolerance 1e-12).
  BasisValues eval(const Vec2& x) const;
  BasisValues eval_unchecked(const Vec2& x) const;

 private:
  int p_;
  std::vector<Vec2> nodes_;
  std::vector<Poly2> funcs_;
  std::vector<std::array<int, 3>> exponents_;  // (k1, k2, p - k1 - k2) per node
};

/// Piecewise basis of degree p on the unit square split along xi + eta = 1
/// into T_I (lower-left) and T_II (upper-right). Each function is a degree-p
/// polynomial on either half and continuous across the diagonal.
///
/// Nodes are the (p+1)^2 points (i/p, j/p), index j*(p+1) + i. Half 0 (T_I)
/// uses the square coordinates as local triangle coordinates; half 1 (T_II)
/// uses (1 - xi, 1 - eta), which maps T_II onto the reference triangle.
class SquareBasis {
 public:
  enum class Side { automatic, lower, upper };

  explicit SquareBasis(int p);

  int degree() const { return p_; }
  int size() const { return (p_ + 1) * (p_ + 1); }
  const std::vector<Vec2>& nodes() const { return nodes_; }

  /// Restriction of function k to half h in square coordinates.
  const Poly2& piece(int h, int k) const { return pieces_[h][k]; }
  /// Triangle-basis index of function k in the local frame of half h, or -1
  /// when the function vanishes on that half.
  int local_index(int h, int k) const { return local_[h][k]; }
  /// Inverse of local_index.
  int square_index(int h, int local) const { return square_[h][local]; }

  static Vec2 to_local(int h, const Vec2& x) { return h == 0 ? x : Vec2(1.0 - x.x(), 1.0 - x.y()); }

  /// Points on the diagonal use T_I unless a side is forced.
  BasisValues eval(const Vec2& x, Side side = Side::automatic) const;

 private:
  int p_;
  std::vector<Vec2> nodes_;
  std::vector<int> local_[2];
  std::vector<int> square_[2];
  std::vector<Poly2> pieces_[2];
  TriangleBasis tri_;
};

/// Lagrange basis through equidistant nodes k / p_gamma on [0, 1]; for
/// p_gamma = 0 the single node sits at tau = 1.
class TemporalBasis {
 public:
  explicit TemporalBasis(int p_gamma);

  int degree() const { return pg_; }
  int size() const { return pg_ + 1; }
  const std::vector<double>& nodes() const { return nodes_; }
  const Poly1& function(int k) const { return funcs_[k]; }

  struct Values {
    Eigen::VectorXd values;
    Eigen::VectorXd derivatives;
  };
  Values eval(double tau) const;

 private:
  int pg_;
  std::vector<double> nodes_;
  std::vector<Poly1> funcs_;
};

enum class ElementKind { triangle, square };

/// Tensor-product values with index spatial * n_gamma + temporal.
struct SpaceTimeValues {
  Eigen::VectorXd values;
  GradientTable gradients;
  Eigen::VectorXd time_derivatives;
};

SpaceTimeValues eval_spacetime_basis(const DiscretizationOrder& order, ElementKind kind, const Vec2& x,
                                     double tau, SquareBasis::Side side = SquareBasis::Side::automatic);

}  // namespace stdg
