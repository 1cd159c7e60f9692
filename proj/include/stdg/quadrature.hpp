#pragma once

#include "stdg/polynomial.hpp"

#include <vector>

namespace stdg {

struct QuadPoint1 {
  double x;
  double w;
};

struct QuadPoint2 {
  Vec2 x;
  double w;
};

/// n-point Gauss-Legendre rule on [0, 1]; exact for degree 2n-1.
std::vector<QuadPoint1> gauss_legendre01(int n);

/// Collapsed (conical product) Gauss rule on the reference triangle,
/// exact for polynomials of total degree <= `degree`. Weights sum to 1/2.
std::vector<QuadPoint2> triangle_rule(int degree);

/// Gauss rule on [0, 1] exact for polynomials of degree <= `degree`.
std::vector<QuadPoint1> line_rule(int degree);

}  // namespace stdg
