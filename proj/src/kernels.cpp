#include "stdg/kernels.hpp"

#include "stdg/quadrature.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace stdg {

namespace {

const std::array<Vec2, 3> kRefVertices{Vec2(0.0, 0.0), Vec2(1.0, 0.0), Vec2(0.0, 1.0)};
const Vec2 kRefBarycenter(1.0 / 3.0, 1.0 / 3.0);

/// Selection matrix P(k, local_index(h, k)) = 1 for half h.
Eigen::MatrixXd half_selection(const SquareBasis& sq, int n_local, int h) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(sq.size(), n_local);
  for (int k = 0; k < sq.size(); ++k)
    if (sq.local_index(h, k) >= 0) p(k, sq.local_index(h, k)) = 1.0;
  return p;
}

}  // namespace

ReferenceTensors precompute_reference_tensors(const DiscretizationOrder& order) {
  order.validate();
  ReferenceTensors t(order);
  const int n = t.triangle.size();
  const int p = order.p;

  // Integrands are polynomials of degree <= 2p, so these rules are exact; the
  // nodal values stay O(1), unlike an expansion in monomials.
  const auto area = triangle_rule(2 * p);
  const auto edge = line_rule(2 * p);
  std::vector<BasisValues> at;
  for (const auto& qp : area) at.push_back(t.triangle.eval_unchecked(qp.x));

  t.mass = Eigen::MatrixXd::Zero(n, n);
  for (int r = 0; r < 2; ++r) {
    t.grad_mass[r] = Eigen::MatrixXd::Zero(n, n);
    for (int s = 0; s < 2; ++s) t.stiffness[r][s] = Eigen::MatrixXd::Zero(n, n);
  }
  for (std::size_t i = 0; i < area.size(); ++i) {
    const double w = area[i].w;
    const BasisValues& b = at[i];
    t.mass.noalias() += w * b.values * b.values.transpose();
    for (int r = 0; r < 2; ++r) {
      t.grad_mass[r].noalias() += w * b.gradients.col(r) * b.values.transpose();
      for (int s = 0; s < 2; ++s) t.stiffness[r][s].noalias() += w * b.gradients.col(r) * b.gradients.col(s).transpose();
    }
  }

  // 1D Lagrange functions on the edge are the traces of the edge-0 nodal functions.
  for (int e = 0; e < 3; ++e) t.edge_nodes[e] = t.triangle.edge_nodes(e);
  auto point_on = [](int e, double s) {
    return Vec2(kRefVertices[e] + s * (kRefVertices[(e + 1) % 3] - kRefVertices[e]));
  };
  std::vector<Eigen::VectorXd> line(edge.size());
  for (std::size_t i = 0; i < edge.size(); ++i) {
    const Eigen::VectorXd v = t.triangle.eval_unchecked(point_on(0, edge[i].x)).values;
    line[i].resize(p + 1);
    for (int c = 0; c <= p; ++c) line[i][c] = v[t.edge_nodes[0][c]];
  }
  t.line_mass = Eigen::MatrixXd::Zero(p + 1, p + 1);
  for (std::size_t i = 0; i < edge.size(); ++i) t.line_mass.noalias() += edge[i].w * line[i] * line[i].transpose();

  for (int e = 0; e < 3; ++e) {
    for (int r = 0; r < 2; ++r) t.edge_grad[e][r] = Eigen::MatrixXd::Zero(n, p + 1);
    for (std::size_t i = 0; i < edge.size(); ++i) {
      const BasisValues b = t.triangle.eval_unchecked(point_on(e, edge[i].x));
      for (int r = 0; r < 2; ++r) t.edge_grad[e][r].noalias() += edge[i].w * b.gradients.col(r) * line[i].transpose();
    }
  }

  // Sub-triangle e of the reference triangle: chi = C + xi (V_e - C) + eta (V_{e+1} - C).
  for (int e = 0; e < 3; ++e) {
    const Vec2 c0 = kRefBarycenter;
    const Vec2 c1 = kRefVertices[e] - c0;
    const Vec2 c2 = kRefVertices[(e + 1) % 3] - c0;
    const double det = c1.x() * c2.y() - c1.y() * c2.x();
    for (int r = 0; r < 2; ++r) t.gradient_coupling[e][r] = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < area.size(); ++i) {
      const Vec2 chi = c0 + area[i].x.x() * c1 + area[i].x.y() * c2;
      const BasisValues b = t.triangle.eval_unchecked(chi);
      for (int r = 0; r < 2; ++r)
        t.gradient_coupling[e][r].noalias() += det * area[i].w * at[i].values * b.gradients.col(r).transpose();
    }
    for (int r = 0; r < 2; ++r) t.divergence_coupling[e][r] = t.gradient_coupling[e][r].transpose();
    // Local edge 1 of the sub-triangle coincides with edge e, same direction.
    t.edge_coupling[e] = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < edge.size(); ++i) {
      const Eigen::VectorXd vm = t.triangle.eval_unchecked(point_on(1, edge[i].x)).values;
      const Eigen::VectorXd pk = t.triangle.eval_unchecked(point_on(e, edge[i].x)).values;
      t.edge_coupling[e].noalias() += edge[i].w * vm * pk.transpose();
    }
  }

  const int ng = order.n_gamma();
  t.time_mass.resize(ng, ng);
  t.time_stiffness.resize(ng, ng);
  t.trace_start.resize(ng);
  t.trace_end.resize(ng);
  for (int a = 0; a < ng; ++a) {
    const Poly1& ga = t.temporal.function(a);
    t.trace_start[a] = ga(0.0);
    t.trace_end[a] = ga(1.0);
  }
  for (int a = 0; a < ng; ++a)
    for (int b = 0; b < ng; ++b) {
      const Poly1& ga = t.temporal.function(a);
      const Poly1& gb = t.temporal.function(b);
      t.time_mass(a, b) = (ga * gb).integrate01();
      t.time_stiffness(a, b) = t.trace_end[a] * t.trace_end[b] - (ga.derivative() * gb).integrate01();
    }
  t.time_mass = 0.5 * (t.time_mass + t.time_mass.transpose()).eval();
  return t;
}

namespace {

constexpr char kMagic[8] = {'S', 'T', 'D', 'G', 'T', 'E', 'N', 'S'};
constexpr std::uint32_t kVersion = 1;

template <class F>
void for_each_tensor(ReferenceTensors& t, F&& f) {
  f(t.mass);
  for (auto& m : t.grad_mass) f(m);
  for (auto& row : t.stiffness)
    for (auto& m : row) f(m);
  f(t.line_mass);
  for (auto& row : t.edge_grad)
    for (auto& m : row) f(m);
  for (auto& row : t.gradient_coupling)
    for (auto& m : row) f(m);
  for (auto& row : t.divergence_coupling)
    for (auto& m : row) f(m);
  for (auto& m : t.edge_coupling) f(m);
  f(t.time_mass);
  f(t.time_stiffness);
}

}  // namespace

void save_reference_tensors(const ReferenceTensors& t, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const std::int32_t hdr[3] = {static_cast<std::int32_t>(kVersion), t.order.p, t.order.p_gamma};
  out.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
  auto& mut = const_cast<ReferenceTensors&>(t);
  for_each_tensor(mut, [&](Eigen::MatrixXd& m) {
    const std::int32_t dims[2] = {static_cast<std::int32_t>(m.rows()), static_cast<std::int32_t>(m.cols())};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
  });
  auto write_vec = [&](const Eigen::VectorXd& v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * v.size()));
  };
  write_vec(t.trace_start);
  write_vec(t.trace_end);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

ReferenceTensors load_reference_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[8];
  std::int32_t hdr[3];
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw std::runtime_error(path.string() + ": not a tensor cache");
  if (hdr[0] != static_cast<std::int32_t>(kVersion))
    throw std::runtime_error(path.string() + ": unsupported tensor cache version " + std::to_string(hdr[0]));
  const DiscretizationOrder order{hdr[1], hdr[2]};
  order.validate();
  ReferenceTensors t(order);
  for (int e = 0; e < 3; ++e) t.edge_nodes[e] = t.triangle.edge_nodes(e);
  for_each_tensor(t, [&](Eigen::MatrixXd& m) {
    std::int32_t dims[2];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in || dims[0] < 0 || dims[1] < 0 || dims[0] > 1000 || dims[1] > 1000)
      throw std::runtime_error(path.string() + ": corrupt tensor cache");
    m.resize(dims[0], dims[1]);
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
  });
  const int ng = order.n_gamma();
  t.trace_start.resize(ng);
  t.trace_end.resize(ng);
  in.read(reinterpret_cast<char*>(t.trace_start.data()), sizeof(double) * ng);
  in.read(reinterpret_cast<char*>(t.trace_end.data()), sizeof(double) * ng);
  if (!in) throw std::runtime_error(path.string() + ": truncated tensor cache");
  return t;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd r(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return r;
}

std::shared_ptr<const SpatialMatrices> assemble_spatial_matrices(const ReferenceTensors& t, const PrimaryMesh& mesh,
                                                                 const DualMesh& dual, const ElementGeometry& geom,
                                                                 double penalty) {
  auto out = std::make_shared<SpatialMatrices>();
  SpatialMatrices& s = *out;
  const int p = t.order.p;
  const int nq = dual.num_quads();
  const int nt = mesh.num_triangles();
  const int npsi = t.square.size();
  const int nphi = t.triangle.size();
  s.n_psi = npsi;
  s.n_phi = nphi;
  const std::array<Eigen::MatrixXd, 2> sel{half_selection(t.square, nphi, 0), half_selection(t.square, nphi, 1)};

  s.mass.assign(nq, Eigen::MatrixXd::Zero(npsi, npsi));
  s.mass_inv.resize(nq);
  s.convection.assign(nq, {Eigen::MatrixXd::Zero(npsi, npsi), Eigen::MatrixXd::Zero(npsi, npsi)});
  s.gradient.resize(nq);
  s.stiffness = BlockSparseMatrix(nq, npsi);
  s.node_positions.resize(nq);

  for (int q = 0; q < nq; ++q) {
    const DualQuad& quad = dual.quads[q];
    Eigen::MatrixXd k_vol = Eigen::MatrixXd::Zero(npsi, npsi);
    for (int h = 0; h < 2; ++h)
      for (int d = 0; d < 2; ++d) s.gradient[q][h][d] = Eigen::MatrixXd::Zero(npsi, nphi);
    for (int h = 0; h < quad.num_halves(); ++h) {
      const AffineMap& map = geom.quad_halves[q][h];
      const Eigen::MatrixXd& P = sel[h];
      s.mass[q] += map.det * P * t.mass * P.transpose();
      for (int d = 0; d < 2; ++d)
        s.convection[q][d] +=
            map.det * P * (map.inv(0, d) * t.grad_mass[0] + map.inv(1, d) * t.grad_mass[1]) * P.transpose();
      const Eigen::Matrix2d g = map.inv * map.inv.transpose();
      Eigen::MatrixXd kr = Eigen::MatrixXd::Zero(nphi, nphi);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) kr += g(r, c) * t.stiffness[r][c];
      k_vol += map.det * P * kr * P.transpose();

      // Pressure gradient: volume part in the pressure element plus jump on the primary edge.
      const int tri = quad.half[h].triangle;
      const int e = quad.half[h].local_edge;
      const AffineMap& tm = geom.triangles[tri];
      const double len = geom.triangle_edge_lengths[tri][e];
      const Vec2& n = geom.triangle_edge_normals[tri][e];
      for (int d = 0; d < 2; ++d)
        s.gradient[q][h][d] = P * (tm.det * (tm.inv(0, d) * t.gradient_coupling[e][0] +
                                             tm.inv(1, d) * t.gradient_coupling[e][1]) -
                                   len * n[d] * t.edge_coupling[e]);
    }
    s.stiffness.add_to_block(q, q, k_vol);
    s.mass_inv[q] = s.mass[q].ldlt().solve(Eigen::MatrixXd::Identity(npsi, npsi));

    s.node_positions[q].resize(npsi);
    for (int k = 0; k < npsi; ++k) {
      const int h = t.square.local_index(0, k) >= 0 ? 0 : 1;
      const int m = t.square.local_index(h, k);
      s.node_positions[q][k] = geom.quad_halves[q][h].map(t.triangle.nodes()[m]);
    }
  }

  s.divergence.resize(nt);
  for (int tri = 0; tri < nt; ++tri) {
    const AffineMap& tm = geom.triangles[tri];
    for (int e = 0; e < 3; ++e) {
      const int h = dual.triangle_halves[tri][e];
      const Eigen::MatrixXd& P = sel[h];
      const double len = geom.triangle_edge_lengths[tri][e];
      const Vec2& n = geom.triangle_edge_normals[tri][e];
      for (int d = 0; d < 2; ++d)
        s.divergence[tri][e][d] = (len * n[d] * t.edge_coupling[e].transpose() -
                                   tm.det * (tm.inv(0, d) * t.divergence_coupling[e][0] +
                                             tm.inv(1, d) * t.divergence_coupling[e][1])) *
                                  P.transpose();
    }
  }

  const int ns = dual.num_segments();
  s.segments.resize(ns);
  const double sigma0 = penalty * (p + 1) * (p + 1);
  for (int id = 0; id < ns; ++id) {
    const DualSegment& seg = dual.segments[id];
    SegmentTrace& tr = s.segments[id];
    tr.normal = geom.segment_normals[id];
    tr.length = geom.segment_lengths[id];
    tr.penalty = sigma0 / geom.segment_h[id];
    tr.weights = tr.length * t.line_mass;
    for (int side = 0; side < 2; ++side) {
      const SegmentSide& ss = seg.side[side];
      tr.quad[side] = ss.quad;
      tr.nodes[side].resize(p + 1);
      tr.normal_grad[side] = Eigen::MatrixXd::Zero(npsi, p + 1);
      const AffineMap& map = geom.quad_halves[ss.quad][ss.half];
      const Eigen::Vector2d w = map.inv * tr.normal;  // grad psi . n = sum_r w_r d_r psi
      for (int c_edge = 0; c_edge <= p; ++c_edge) {
        const int c = ss.local_edge == 0 ? c_edge : p - c_edge;
        tr.nodes[side][c] = t.square.square_index(ss.half, t.edge_nodes[ss.local_edge][c_edge]);
        for (int m = 0; m < nphi; ++m) {
          const int k = t.square.square_index(ss.half, m);
          tr.normal_grad[side](k, c) = tr.length * (w[0] * t.edge_grad[ss.local_edge][0](m, c_edge) +
                                                    w[1] * t.edge_grad[ss.local_edge][1](m, c_edge));
        }
      }
    }
    // Symmetric interior penalty across the segment; jump = side 0 minus side 1.
    std::array<Eigen::MatrixXd, 2> jump;
    for (int side = 0; side < 2; ++side) {
      jump[side] = Eigen::MatrixXd::Zero(npsi, p + 1);
      for (int c = 0; c <= p; ++c) jump[side](tr.nodes[side][c], c) = side == 0 ? 1.0 : -1.0;
    }
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y)
        s.stiffness.add_to_block(tr.quad[x], tr.quad[y],
                                 -0.5 * jump[x] * tr.normal_grad[y].transpose() -
                                     0.5 * tr.normal_grad[x] * jump[y].transpose() +
                                     tr.penalty * jump[x] * tr.weights * jump[y].transpose());
  }
  return out;
}

ElementMatrices assemble_element_matrices(const ReferenceTensors& t, std::shared_ptr<const SpatialMatrices> spatial,
                                          double nu, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("assemble_element_matrices: dt must be positive");
  if (nu < 0.0) throw std::invalid_argument("assemble_element_matrices: nu must be non-negative");
  ElementMatrices em;
  em.nu = nu;
  em.dt = dt;
  em.spatial = std::move(spatial);
  const SpatialMatrices& s = *em.spatial;
  const int nq = static_cast<int>(s.mass.size());
  const int dim = s.n_psi * t.order.n_gamma();
  em.mass_st.resize(nq);
  em.viscous_st = BlockSparseMatrix(nq, dim);
  em.momentum = BlockSparseMatrix(nq, dim);
  for (int q = 0; q < nq; ++q) {
    em.mass_st[q] = kron(s.mass[q], t.time_stiffness);
    em.momentum.add_to_block(q, q, em.mass_st[q]);
  }
  const Eigen::MatrixXd tm = nu * dt * t.time_mass;
  for (int q = 0; q < nq; ++q) {
    const auto& cols = s.stiffness.row_columns(q);
    const auto& blocks = s.stiffness.row_blocks(q);
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const Eigen::MatrixXd b = kron(blocks[k], tm);
      em.viscous_st.add_to_block(q, cols[k], b);
      em.momentum.add_to_block(q, cols[k], b);
    }
  }
  return em;
}

ElementMatrices assemble_element_matrices(const ReferenceTensors& tensors, const PrimaryMesh& mesh,
                                          const DualMesh& dual, const ElementGeometry& geom, double nu, double dt) {
  return assemble_element_matrices(tensors, assemble_spatial_matrices(tensors, mesh, dual, geom), nu, dt);
}

Vec2 rusanov_flux(const Vec2& left, const Vec2& right, const Vec2& n) {
  const double vnl = left.dot(n);
  const double vnr = right.dot(n);
  const double s = 2.0 * std::max(std::abs(vnl), std::abs(vnr));
  return 0.5 * (left * vnl + right * vnr) - 0.5 * s * (right - left);
}

Eigen::MatrixXd contract_flux_terms(const ReferenceTensors& t, const SegmentTrace& segment,
                                    const Eigen::MatrixXd& flux) {
  if (flux.rows() != segment.weights.rows() || flux.cols() != t.order.n_gamma())
    throw std::invalid_argument("contract_flux_terms: flux shape mismatch");
  return segment.weights * flux * t.time_mass;
}

}  // namespace stdg
