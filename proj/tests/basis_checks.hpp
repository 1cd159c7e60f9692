// Property checks over all supported degrees; each returns the worst deviation.
#pragma once

#include "stdg/basis.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace stdg::testing {

struct BasisSuite {
  double delta = 0.0;              // |phi_k(x_l) - delta_kl|, all bases
  double partition = 0.0;          // |sum phi - 1| and |sum grad|
  double diagonal = 0.0;           // split square: T_I vs T_II values on the diagonal
  double fd_gradient = 0.0;        // |grad - central difference|
  double restriction = 0.0;        // split-square piece re-interpolated on its half
  double affine_reproduction = 0.0;  // p = 1 square space contains affine functions
};

inline Vec2 random_in_triangle(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double a = u(rng), b = u(rng);
  if (a + b > 1.0) {
    a = 1.0 - a;
    b = 1.0 - b;
  }
  return {a, b};
}

inline BasisSuite run_basis_suite(int max_p = kMaxSpatialDegree, int max_pg = 3, unsigned seed = 7) {
  BasisSuite r;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto upd = [](double& worst, double v) { worst = std::max(worst, std::abs(v)); };
  const double step = 1e-6;

  for (int p = 1; p <= max_p; ++p) {
    const TriangleBasis tri(p);
    for (int l = 0; l < tri.size(); ++l) {
      const auto v = tri.eval(tri.nodes()[l]).values;
      for (int k = 0; k < tri.size(); ++k) upd(r.delta, v[k] - (k == l ? 1.0 : 0.0));
    }
    for (int i = 0; i < 100; ++i) {
      // keep the stencil inside the triangle
      Vec2 x = random_in_triangle(rng) * (1.0 - 6 * step) + Vec2(2 * step, 2 * step);
      const BasisValues b = tri.eval(x);
      upd(r.partition, b.values.sum() - 1.0);
      upd(r.partition, b.gradients.col(0).sum());
      upd(r.partition, b.gradients.col(1).sum());
      for (int d = 0; d < 2; ++d) {
        Vec2 e = Vec2::Zero();
        e[d] = step;
        const Eigen::VectorXd fd = (tri.eval(x + e).values - tri.eval(x - e).values) / (2 * step);
        upd(r.fd_gradient, (fd - b.gradients.col(d)).cwiseAbs().maxCoeff());
      }
    }

    const SquareBasis sq(p);
    for (int l = 0; l < sq.size(); ++l) {
      const Vec2 x = sq.nodes()[l];
      const bool on_diag = std::abs(x.x() + x.y() - 1.0) < 1e-14;
      for (auto side : {SquareBasis::Side::lower, SquareBasis::Side::upper}) {
        const bool lower_ok = x.x() + x.y() <= 1.0 + 1e-14;
        if (!on_diag && (side == SquareBasis::Side::lower) != lower_ok) continue;
        const auto v = sq.eval(x, side).values;
        for (int k = 0; k < sq.size(); ++k) upd(r.delta, v[k] - (k == l ? 1.0 : 0.0));
      }
    }
    for (int i = 0; i < 100; ++i) {
      const Vec2 x(u(rng) * (1 - 4 * step) + 2 * step, u(rng) * (1 - 4 * step) + 2 * step);
      const double s = x.x() + x.y() - 1.0;
      if (std::abs(s) < 4 * step) continue;
      const BasisValues b = sq.eval(x);
      upd(r.partition, b.values.sum() - 1.0);
      upd(r.partition, b.gradients.col(0).sum());
      upd(r.partition, b.gradients.col(1).sum());
      for (int d = 0; d < 2; ++d) {
        Vec2 e = Vec2::Zero();
        e[d] = step;
        const Eigen::VectorXd fd = (sq.eval(x + e).values - sq.eval(x - e).values) / (2 * step);
        upd(r.fd_gradient, (fd - b.gradients.col(d)).cwiseAbs().maxCoeff());
      }
      // diagonal continuity at a random diagonal point
      const double t = u(rng);
      const Vec2 dpt(t, 1.0 - t);
      const auto lo = sq.eval(dpt, SquareBasis::Side::lower).values;
      const auto hi = sq.eval(dpt, SquareBasis::Side::upper).values;
      upd(r.diagonal, (lo - hi).cwiseAbs().maxCoeff());
    }
    // each piece, interpolated at its half's nodes, reproduces itself
    for (int h = 0; h < 2; ++h)
      for (int k = 0; k < sq.size(); ++k) {
        const Poly2& piece = sq.piece(h, k);
        for (int i = 0; i < 20; ++i) {
          const Vec2 loc = random_in_triangle(rng);
          const Vec2 x = SquareBasis::to_local(h, loc);  // the map is an involution
          double interp = 0.0;
          const auto lv = tri.eval(loc).values;
          for (int m = 0; m < tri.size(); ++m)
            interp += lv[m] * piece(SquareBasis::to_local(h, tri.nodes()[m]));
          upd(r.restriction, interp - piece(x));
        }
      }
    if (p == 1) {
      for (int i = 0; i < 50; ++i) {
        const double a0 = u(rng), a1 = u(rng), a2 = u(rng);
        const Vec2 x(u(rng), u(rng));
        const auto v = sq.eval(x).values;
        double s = 0.0;
        for (int k = 0; k < sq.size(); ++k) s += v[k] * (a0 + a1 * sq.nodes()[k].x() + a2 * sq.nodes()[k].y());
        upd(r.affine_reproduction, s - (a0 + a1 * x.x() + a2 * x.y()));
      }
    }
  }

  for (int pg = 0; pg <= max_pg; ++pg) {
    const TemporalBasis tb(pg);
    for (int l = 0; l < tb.size(); ++l) {
      const auto v = tb.eval(tb.nodes()[l]).values;
      for (int k = 0; k < tb.size(); ++k) upd(r.delta, v[k] - (k == l ? 1.0 : 0.0));
    }
    for (int i = 0; i < 100; ++i) {
      const double t = u(rng) * (1 - 4 * step) + 2 * step;
      const auto g = tb.eval(t);
      upd(r.partition, g.values.sum() - 1.0);
      upd(r.partition, g.derivatives.sum());
      const Eigen::VectorXd fd = (tb.eval(t + step).values - tb.eval(t - step).values) / (2 * step);
      upd(r.fd_gradient, (fd - g.derivatives).cwiseAbs().maxCoeff());
    }
  }
  return r;
}

}  // namespace stdg::testing
