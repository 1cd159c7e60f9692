// Shared helpers for the test suites: random meshes and independent
// quadrature-based reference computations.
#pragma once

#include "stdg/basis.hpp"
#include "stdg/kernels.hpp"
#include "stdg/mesh.hpp"
#include "stdg/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace stdg::testing {

/// Structured periodic mesh with interior vertices moved by up to
/// `amplitude` cell widths, then mapped by x -> A x + b. Periodic pairs stay
/// translations because the map is affine.
inline PrimaryMesh perturbed_periodic_mesh(int n, double amplitude, std::mt19937& rng,
                                           const Eigen::Matrix2d& a = Eigen::Matrix2d::Identity(),
                                           const Vec2& b = Vec2::Zero()) {
  const PrimaryMesh base = generate_structured_mesh(n, Rect{0.0, 1.0, 0.0, 1.0});
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<Vec2> verts = base.vertices;
  for (int j = 1; j < n; ++j)
    for (int i = 1; i < n; ++i) verts[j * (n + 1) + i] += Vec2(u(rng), u(rng)) * amplitude / n;
  for (Vec2& v : verts) v = a * v + b;
  std::vector<std::pair<int, int>> pairs;
  for (int e = 0; e < base.num_edges(); ++e)
    if (base.edges[e].partner > e) pairs.emplace_back(e, base.edges[e].partner);
  return make_mesh(verts, base.triangles, pairs);
}

/// Random orientation-preserving linear map with singular values in [0.5, 2].
inline Eigen::Matrix2d random_linear_map(std::mt19937& rng) {
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI), sv(0.5, 2.0);
  auto rot = [](double t) {
    Eigen::Matrix2d r;
    r << std::cos(t), -std::sin(t), std::sin(t), std::cos(t);
    return r;
  };
  return rot(ang(rng)) * Eigen::Vector2d(sv(rng), sv(rng)).asDiagonal() * rot(ang(rng));
}

/// Largest |a - b| relative to max(1, max|b|).
inline double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

/// Values and physical gradients of the velocity basis of half h of a dual
/// element at a physical point, computed from the half's corners.
struct PointBasis {
  Eigen::VectorXd values;
  Eigen::MatrixXd gradients;  // n x 2
};

inline PointBasis half_basis_at(const TriangleBasis& tri, const SquareBasis& sq, const std::array<Vec2, 3>& c, int h,
                                const Vec2& x) {
  Eigen::Matrix2d j;
  j.col(0) = c[1] - c[0];
  j.col(1) = c[2] - c[0];
  const Vec2 ref = j.inverse() * (x - c[0]);
  const BasisValues b = tri.eval_unchecked(ref);
  PointBasis out;
  out.values = Eigen::VectorXd::Zero(sq.size());
  out.gradients = Eigen::MatrixXd::Zero(sq.size(), 2);
  const Eigen::Matrix2d jit = j.inverse().transpose();
  for (int m = 0; m < tri.size(); ++m) {
    const int k = sq.square_index(h, m);
    out.values[k] = b.values[m];
    out.gradients.row(k) = (jit * b.gradients.row(m).transpose()).transpose();
  }
  return out;
}

inline PointBasis triangle_basis_at(const TriangleBasis& tri, const std::array<Vec2, 3>& v, const Vec2& x) {
  Eigen::Matrix2d j;
  j.col(0) = v[1] - v[0];
  j.col(1) = v[2] - v[0];
  const BasisValues b = tri.eval_unchecked(j.inverse() * (x - v[0]));
  return {b.values, b.gradients * j.inverse()};
}

inline double tri_area(const std::array<Vec2, 3>& c) {
  return 0.5 * ((c[1] - c[0]).x() * (c[2] - c[0]).y() - (c[1] - c[0]).y() * (c[2] - c[0]).x());
}

/// Spatial matrices recomputed by Gauss quadrature in physical coordinates.
struct OracleMatrices {
  std::vector<Eigen::MatrixXd> mass;
  std::vector<std::array<Eigen::MatrixXd, 2>> convection;
  std::vector<std::array<std::array<Eigen::MatrixXd, 2>, 2>> gradient;
  std::vector<std::array<std::array<Eigen::MatrixXd, 2>, 3>> divergence;
  Eigen::MatrixXd stiffness;  // dense SIPG operator
};

inline OracleMatrices quadrature_assembly(const DiscretizationOrder& order, const PrimaryMesh& mesh,
                                          const DualMesh& dual, double penalty) {
  const int p = order.p;
  const TriangleBasis tri(p);
  const SquareBasis sq(p);
  const int npsi = sq.size(), nphi = tri.size();
  const auto area_rule = triangle_rule(2 * p + 4);
  const auto line = line_rule(2 * p + 4);
  const int nq = dual.num_quads();

  OracleMatrices o;
  o.mass.assign(nq, Eigen::MatrixXd::Zero(npsi, npsi));
  o.convection.assign(nq, {Eigen::MatrixXd::Zero(npsi, npsi), Eigen::MatrixXd::Zero(npsi, npsi)});
  o.gradient.resize(nq);
  o.stiffness = Eigen::MatrixXd::Zero(nq * npsi, nq * npsi);
  for (int q = 0; q < nq; ++q) {
    for (int h = 0; h < 2; ++h)
      for (int d = 0; d < 2; ++d) o.gradient[q][h][d] = Eigen::MatrixXd::Zero(npsi, nphi);
    const DualQuad& quad = dual.quads[q];
    for (int h = 0; h < quad.num_halves(); ++h) {
      const auto& c = quad.half[h].corners;
      const double area = tri_area(c);
      const auto& tv = mesh.triangles[quad.half[h].triangle];
      const std::array<Vec2, 3> verts{mesh.vertices[tv[0]], mesh.vertices[tv[1]], mesh.vertices[tv[2]]};
      for (const auto& qp : area_rule) {
        const Vec2 x = c[0] + (c[1] - c[0]) * qp.x.x() + (c[2] - c[0]) * qp.x.y();
        const double w = 2.0 * area * qp.w;
        const PointBasis v = half_basis_at(tri, sq, c, h, x);
        const PointBasis f = triangle_basis_at(tri, verts, x);
        o.mass[q] += w * v.values * v.values.transpose();
        for (int d = 0; d < 2; ++d) {
          o.convection[q][d] += w * v.gradients.col(d) * v.values.transpose();
          o.gradient[q][h][d] += w * v.values * f.gradients.col(d).transpose();
        }
        o.stiffness.block(q * npsi, q * npsi, npsi, npsi) += w * v.gradients * v.gradients.transpose();
      }
      // jump term on the primary edge c[1] -> c[2]; outward normal of the half's triangle
      const Vec2 d = c[2] - c[1];
      const double len = d.norm();
      const Vec2 n(d.y() / len, -d.x() / len);
      for (const auto& lp : line) {
        const Vec2 x = c[1] + d * lp.x;
        const PointBasis v = half_basis_at(tri, sq, c, h, x);
        const PointBasis f = triangle_basis_at(tri, verts, x);
        for (int k = 0; k < 2; ++k) o.gradient[q][h][k] -= len * lp.w * n[k] * v.values * f.values.transpose();
      }
    }
  }

  o.divergence.resize(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (int e = 0; e < 3; ++e) {
      const int q = dual.triangle_quads[t][e];
      const int h = dual.triangle_halves[t][e];
      const auto& c = dual.quads[q].half[h].corners;
      const auto& tv = mesh.triangles[t];
      const std::array<Vec2, 3> verts{mesh.vertices[tv[0]], mesh.vertices[tv[1]], mesh.vertices[tv[2]]};
      for (int k = 0; k < 2; ++k) o.divergence[t][e][k] = Eigen::MatrixXd::Zero(nphi, npsi);
      const double area = tri_area(c);
      for (const auto& qp : area_rule) {
        const Vec2 x = c[0] + (c[1] - c[0]) * qp.x.x() + (c[2] - c[0]) * qp.x.y();
        const PointBasis v = half_basis_at(tri, sq, c, h, x);
        const PointBasis f = triangle_basis_at(tri, verts, x);
        for (int k = 0; k < 2; ++k) o.divergence[t][e][k] -= 2.0 * area * qp.w * f.gradients.col(k) * v.values.transpose();
      }
      const Vec2 d = c[2] - c[1];
      const double len = d.norm();
      const Vec2 n(d.y() / len, -d.x() / len);
      for (const auto& lp : line) {
        const Vec2 x = c[1] + d * lp.x;
        const PointBasis v = half_basis_at(tri, sq, c, h, x);
        const PointBasis f = triangle_basis_at(tri, verts, x);
        for (int k = 0; k < 2; ++k) o.divergence[t][e][k] += len * lp.w * n[k] * f.values * v.values.transpose();
      }
    }

  // interior penalty over the dual segments (barycenter -> vertex)
  const double sigma0 = penalty * (p + 1) * (p + 1);
  for (const DualSegment& seg : dual.segments) {
    const int t = seg.triangle;
    const auto& tv = mesh.triangles[t];
    const Vec2 a = mesh.barycenter(t);
    const Vec2 b = mesh.vertices[tv[seg.vertex_local]];
    const double len = (b - a).norm();
    std::array<const std::array<Vec2, 3>*, 2> corners{};
    double h_seg = INFINITY;
    for (int s = 0; s < 2; ++s) {
      const SegmentSide& ss = seg.side[s];
      corners[s] = &dual.quads[ss.quad].half[ss.half].corners;
      h_seg = std::min(h_seg, 2.0 * tri_area(*corners[s]) / len);
    }
    // outward from side 0: the side-0 half lies to the left of a -> b
    const Vec2 n = Vec2((b - a).y(), -(b - a).x()) / len;
    const double sigma = sigma0 / h_seg;
    for (const auto& lp : line) {
      const Vec2 x = a + (b - a) * lp.x;
      std::array<PointBasis, 2> v{half_basis_at(tri, sq, *corners[0], seg.side[0].half, x),
                                  half_basis_at(tri, sq, *corners[1], seg.side[1].half, x)};
      const double w = len * lp.w;
      for (int sx = 0; sx < 2; ++sx)
        for (int sy = 0; sy < 2; ++sy) {
          const double jx = sx == 0 ? 1.0 : -1.0, jy = sy == 0 ? 1.0 : -1.0;
          const Eigen::VectorXd dnx = v[sx].gradients * n, dny = v[sy].gradients * n;
          o.stiffness.block(seg.side[sx].quad * npsi, seg.side[sy].quad * npsi, npsi, npsi) +=
              w * (-0.5 * jy * dnx * v[sy].values.transpose() - 0.5 * jx * v[sx].values * dny.transpose() +
                   sigma * jx * jy * v[sx].values * v[sy].values.transpose());
        }
    }
  }
  return o;
}

/// Temporal matrices by Gauss quadrature.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> temporal_oracle(int p_gamma) {
  const TemporalBasis tb(p_gamma);
  const int n = tb.size();
  Eigen::MatrixXd tm = Eigen::MatrixXd::Zero(n, n), tk = Eigen::MatrixXd::Zero(n, n);
  for (const auto& qp : gauss_legendre01(p_gamma + 3)) {
    const auto g = tb.eval(qp.x);
    tm += qp.w * g.values * g.values.transpose();
    tk -= qp.w * g.derivatives * g.values.transpose();
  }
  const auto e = tb.eval(1.0).values;
  tk += e * e.transpose();
  return {tm, tk};
}

struct OracleComparison {
  double worst = 0.0;
  std::string what;
  void note(double diff, const std::string& name) {
    if (!(diff <= worst)) {
      worst = diff;
      what = name;
    }
  }
};

/// Compares every assembled spatial and space-time matrix with the oracle.
inline OracleComparison compare_with_quadrature(const DiscretizationOrder& order, const PrimaryMesh& mesh,
                                                double penalty, double nu, double dt) {
  const DualMesh dual = build_dual_grid(mesh, true);
  const ElementGeometry geom = compute_geometry(mesh, dual);
  const ReferenceTensors rt = precompute_reference_tensors(order);
  const auto spatial = assemble_spatial_matrices(rt, mesh, dual, geom, penalty);
  const ElementMatrices em = assemble_element_matrices(rt, spatial, nu, dt);
  const OracleMatrices o = quadrature_assembly(order, mesh, dual, penalty);
  const auto [tm, tk] = temporal_oracle(order.p_gamma);

  OracleComparison c;
  c.note(rel_diff(rt.time_mass, tm), "time mass");
  c.note(rel_diff(rt.time_stiffness, tk), "time stiffness");
  for (int q = 0; q < dual.num_quads(); ++q) {
    c.note(rel_diff(spatial->mass[q], o.mass[q]), "mass");
    c.note(rel_diff(em.mass_st[q], kron(o.mass[q], tk)), "space-time mass");
    for (int d = 0; d < 2; ++d) {
      c.note(rel_diff(spatial->convection[q][d], o.convection[q][d]), "convection");
      for (int h = 0; h < 2; ++h) c.note(rel_diff(spatial->gradient[q][h][d], o.gradient[q][h][d]), "gradient");
    }
  }
  for (int t = 0; t < mesh.num_triangles(); ++t)
    for (int e = 0; e < 3; ++e)
      for (int d = 0; d < 2; ++d) c.note(rel_diff(spatial->divergence[t][e][d], o.divergence[t][e][d]), "divergence");
  c.note(rel_diff(spatial->stiffness.to_dense(), o.stiffness), "viscous");
  const int nst = spatial->n_psi * order.n_gamma();
  const Eigen::MatrixXd visc = em.viscous_st.to_dense();
  Eigen::MatrixXd visc_oracle(visc.rows(), visc.cols());
  for (int i = 0; i < dual.num_quads(); ++i)
    for (int j = 0; j < dual.num_quads(); ++j)
      visc_oracle.block(i * nst, j * nst, nst, nst) =
          nu * dt * kron(o.stiffness.block(i * spatial->n_psi, j * spatial->n_psi, spatial->n_psi, spatial->n_psi), tm);
  c.note(rel_diff(visc, visc_oracle), "space-time viscous");
  return c;
}

}  // namespace stdg::testing
