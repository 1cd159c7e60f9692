#include "stdg/solver.hpp"

#include "stdg/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stdg {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<RowMat> block_of(Eigen::VectorXd& v, int element, int n_spatial, int ng) {
  return Eigen::Map<RowMat>(v.data() + static_cast<Eigen::Index>(element) * n_spatial * ng, n_spatial, ng);
}

Eigen::Map<const RowMat> block_of(const Eigen::VectorXd& v, int element, int n_spatial, int ng) {
  return Eigen::Map<const RowMat>(v.data() + static_cast<Eigen::Index>(element) * n_spatial * ng, n_spatial, ng);
}

Eigen::VectorXd end_values(const Eigen::VectorXd& v, int n_spatial, const Eigen::VectorXd& trace_end) {
  const int ng = static_cast<int>(trace_end.size());
  const int ne = static_cast<int>(v.size() / (n_spatial * ng));
  Eigen::VectorXd out(ne * n_spatial);
  for (int e = 0; e < ne; ++e) out.segment(e * n_spatial, n_spatial) = block_of(v, e, n_spatial, ng) * trace_end;
  return out;
}

Eigen::VectorXd replicate(const Eigen::VectorXd& spatial, int n_spatial, int ng) {
  const int ne = static_cast<int>(spatial.size() / n_spatial);
  Eigen::VectorXd out(spatial.size() * ng);
  for (int e = 0; e < ne; ++e)
    block_of(out, e, n_spatial, ng) = spatial.segment(e * n_spatial, n_spatial).replicate(1, ng);
  return out;
}

}  // namespace

Eigen::VectorXd SpaceTimeState::pressure_end() const {
  return end_values(pressure, order.n_phi(), TemporalBasis(order.p_gamma).eval(1.0).values);
}

Eigen::VectorXd SpaceTimeState::velocity_end(int component) const {
  return end_values(velocity.at(component), order.n_psi(), TemporalBasis(order.p_gamma).eval(1.0).values);
}

Solver::Solver(PrimaryMesh mesh, const DiscretizationOrder& order, FluidParams fluid, PicardConfig picard,
               SolverTolerances tol)
    : mesh_(std::move(mesh)), order_(order), fluid_(std::move(fluid)), picard_(picard), tol_(tol) {
  order_.validate();
  if (fluid_.nu < 0.0) throw std::invalid_argument("viscosity must be non-negative");
  if (picard_.iterations < 1) throw std::invalid_argument("Picard iteration count must be >= 1");
  dual_ = build_dual_grid(mesh_, true);
  geom_ = compute_geometry(mesh_, dual_);
  tensors_ = std::make_shared<const ReferenceTensors>(precompute_reference_tensors(order_));
  spatial_ = assemble_spatial_matrices(*tensors_, mesh_, dual_, geom_, tol_.penalty);

  const SpatialMatrices& s = *spatial_;
  pressure_op_ = BlockSparseMatrix(mesh_.num_triangles(), order_.n_phi());
  for (int q = 0; q < dual_.num_quads(); ++q) {
    const DualQuad& quad = dual_.quads[q];
    for (int h1 = 0; h1 < 2; ++h1)
      for (int h2 = 0; h2 < 2; ++h2) {
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(order_.n_phi(), order_.n_phi());
        for (int d = 0; d < 2; ++d) b += s.gradient[q][h1][d].transpose() * s.mass_inv[q] * s.gradient[q][h2][d];
        pressure_op_.add_to_block(quad.half[h1].triangle, quad.half[h2].triangle, b);
      }
  }
  pressure_precond_ = BlockJacobi(pressure_op_);
  time_transform_ = tensors_->time_mass.ldlt().solve(tensors_->time_stiffness);
}

SpaceTimeState Solver::project_initial_condition(const FlowField& fields, double t) const {
  const ReferenceTensors& rt = *tensors_;
  const int npsi = order_.n_psi();
  const int nphi = order_.n_phi();
  const auto rule = triangle_rule(2 * order_.p + 2);
  std::vector<BasisValues> tri_vals;
  for (const auto& qp : rule) tri_vals.push_back(rt.triangle.eval_unchecked(qp.x));

  Eigen::VectorXd u(dual_.num_quads() * npsi), v(dual_.num_quads() * npsi), p(mesh_.num_triangles() * nphi);
  for (int q = 0; q < dual_.num_quads(); ++q) {
    Eigen::VectorXd bu = Eigen::VectorXd::Zero(npsi), bv = Eigen::VectorXd::Zero(npsi);
    for (int h = 0; h < 2; ++h) {
      const AffineMap& map = geom_.quad_halves[q][h];
      for (std::size_t i = 0; i < rule.size(); ++i) {
        const FlowSample f = fields(map.map(rule[i].x), t);
        const double w = rule[i].w * map.det;
        for (int m = 0; m < nphi; ++m) {
          const int k = rt.square.square_index(h, m);
          bu[k] += w * f.u * tri_vals[i].values[m];
          bv[k] += w * f.v * tri_vals[i].values[m];
        }
      }
    }
    u.segment(q * npsi, npsi) = spatial_->mass_inv[q] * bu;
    v.segment(q * npsi, npsi) = spatial_->mass_inv[q] * bv;
  }
  const Eigen::LDLT<Eigen::MatrixXd> tri_mass(rt.mass);
  for (int tr = 0; tr < mesh_.num_triangles(); ++tr) {
    const AffineMap& map = geom_.triangles[tr];
    Eigen::VectorXd bp = Eigen::VectorXd::Zero(nphi);
    for (std::size_t i = 0; i < rule.size(); ++i) bp += rule[i].w * fields(map.map(rule[i].x), t).p * tri_vals[i].values;
    // the Jacobian cancels between both sides
    p.segment(tr * nphi, nphi) = tri_mass.solve(bp);
  }

  SpaceTimeState s;
  s.order = order_;
  s.t0 = s.t1 = t;
  s.velocity = {replicate(u, npsi, order_.n_gamma()), replicate(v, npsi, order_.n_gamma())};
  s.pressure = replicate(p, nphi, order_.n_gamma());
  return s;
}

double Solver::max_signal_speed(const SpaceTimeState& state) const {
  const Eigen::VectorXd u = state.velocity_end(0);
  const Eigen::VectorXd v = state.velocity_end(1);
  const int npsi = order_.n_psi();
  double s_max = 0.0;
  for (const SegmentTrace& seg : spatial_->segments)
    for (std::size_t c = 0; c < seg.nodes[0].size(); ++c)
      for (int side = 0; side < 2; ++side) {
        const int idx = seg.quad[side] * npsi + seg.nodes[side][c];
        s_max = std::max(s_max, 2.0 * std::abs(u[idx] * seg.normal.x() + v[idx] * seg.normal.y()));
      }
  return s_max;
}

double Solver::compute_timestep(const SpaceTimeState& state, const TimeStepControl& control) const {
  const double remaining = control.t_end - state.t1;
  if (!(remaining > 0.0)) throw std::invalid_argument("compute_timestep: final time already reached");
  const double s_max = max_signal_speed(state);
  double dt = s_max > 0.0 ? control.cfl / (2.0 * order_.p + 1.0) * geom_.h_min / s_max : control.dt_max;
  // land exactly on t_end
  if (dt >= remaining * (1.0 - 1e-12)) dt = remaining;
  return dt;
}

std::array<Eigen::VectorXd, 2> Solver::convection(const std::array<Eigen::VectorXd, 2>& vel) const {
  const ReferenceTensors& rt = *tensors_;
  const SpatialMatrices& s = *spatial_;
  const int npsi = order_.n_psi();
  const int ng = order_.n_gamma();
  const int p = order_.p;
  std::array<Eigen::VectorXd, 2> out{Eigen::VectorXd::Zero(velocity_size()), Eigen::VectorXd::Zero(velocity_size())};

  for (int q = 0; q < dual_.num_quads(); ++q) {
    const auto u = block_of(vel[0], q, npsi, ng);
    const auto v = block_of(vel[1], q, npsi, ng);
    // nodal fluxes: F_d = (v_d u, v_d v)
    const RowMat uu = u.cwiseProduct(u), uv = u.cwiseProduct(v), vv = v.cwiseProduct(v);
    block_of(out[0], q, npsi, ng).noalias() -= (s.convection[q][0] * uu + s.convection[q][1] * uv) * rt.time_mass;
    block_of(out[1], q, npsi, ng).noalias() -= (s.convection[q][0] * uv + s.convection[q][1] * vv) * rt.time_mass;
  }

  Eigen::MatrixXd fu(p + 1, ng), fv(p + 1, ng);
  for (const SegmentTrace& seg : s.segments) {
    const auto u0 = block_of(vel[0], seg.quad[0], npsi, ng);
    const auto v0 = block_of(vel[1], seg.quad[0], npsi, ng);
    const auto u1 = block_of(vel[0], seg.quad[1], npsi, ng);
    const auto v1 = block_of(vel[1], seg.quad[1], npsi, ng);
    for (int c = 0; c <= p; ++c)
      for (int b = 0; b < ng; ++b) {
        const int k0 = seg.nodes[0][c];
        const int k1 = seg.nodes[1][c];
        const Vec2 f = rusanov_flux(Vec2(u0(k0, b), v0(k0, b)), Vec2(u1(k1, b), v1(k1, b)), seg.normal);
        fu(c, b) = f.x();
        fv(c, b) = f.y();
      }
    const Eigen::MatrixXd cu = contract_flux_terms(rt, seg, fu);
    const Eigen::MatrixXd cv = contract_flux_terms(rt, seg, fv);
    auto o0u = block_of(out[0], seg.quad[0], npsi, ng);
    auto o0v = block_of(out[1], seg.quad[0], npsi, ng);
    auto o1u = block_of(out[0], seg.quad[1], npsi, ng);
    auto o1v = block_of(out[1], seg.quad[1], npsi, ng);
    for (int c = 0; c <= p; ++c) {
      o0u.row(seg.nodes[0][c]) += cu.row(c);
      o0v.row(seg.nodes[0][c]) += cv.row(c);
      o1u.row(seg.nodes[1][c]) -= cu.row(c);
      o1v.row(seg.nodes[1][c]) -= cv.row(c);
    }
  }
  return out;
}

std::array<Eigen::VectorXd, 2> Solver::momentum_predictor(const SpaceTimeState& previous,
                                                          const std::array<Eigen::VectorXd, 2>& vk,
                                                          const Eigen::VectorXd& pk, const ElementMatrices& em,
                                                          const BlockJacobi* precond, CgReport* report) const {
  const ReferenceTensors& rt = *tensors_;
  const SpatialMatrices& s = *spatial_;
  const int npsi = order_.n_psi();
  const int nphi = order_.n_phi();
  const int ng = order_.n_gamma();
  const double dt = em.dt;
  const double t0 = previous.t1;

  const std::array<Eigen::VectorXd, 2> conv = convection(vk);
  std::array<Eigen::VectorXd, 2> rhs{Eigen::VectorXd(velocity_size()), Eigen::VectorXd(velocity_size())};
  const std::array<Eigen::VectorXd, 2> v_prev{previous.velocity_end(0), previous.velocity_end(1)};

  std::vector<double> times(ng);
  for (int b = 0; b < ng; ++b) times[b] = t0 + dt * rt.temporal.nodes()[b];

  for (int q = 0; q < dual_.num_quads(); ++q) {
    const DualQuad& quad = dual_.quads[q];
    const auto p0 = block_of(pk, quad.half[0].triangle, nphi, ng);
    const auto p1 = block_of(pk, quad.half[1].triangle, nphi, ng);
    RowMat src_u, src_v;
    if (fluid_.source) {
      src_u.resize(npsi, ng);
      src_v.resize(npsi, ng);
      const auto u = block_of(vk[0], q, npsi, ng);
      const auto v = block_of(vk[1], q, npsi, ng);
      for (int k = 0; k < npsi; ++k)
        for (int b = 0; b < ng; ++b) {
          const Vec2 f = fluid_.source(Vec2(u(k, b), v(k, b)), s.node_positions[q][k], times[b]);
          src_u(k, b) = f.x();
          src_v(k, b) = f.y();
        }
    }
    for (int d = 0; d < 2; ++d) {
      auto r = block_of(rhs[d], q, npsi, ng);
      r.noalias() = s.mass[q] * v_prev[d].segment(q * npsi, npsi) * rt.trace_start.transpose();
      r.noalias() -= dt * block_of(conv[d], q, npsi, ng);
      r.noalias() -= dt * (s.gradient[q][0][d] * p0 + s.gradient[q][1][d] * p1) * rt.time_mass;
      if (fluid_.source) r.noalias() += dt * s.mass[q] * (d == 0 ? src_u : src_v) * rt.time_mass;
    }
  }

  SolveOptions opts;
  opts.tol = tol_.momentum;
  opts.max_iter = tol_.max_iterations;
  opts.preconditioner = precond;
  std::array<Eigen::VectorXd, 2> v_star;
  CgReport worst;
  worst.converged = true;
  for (int d = 0; d < 2; ++d) {
    SolveResult res = bicgstab_solve(em.momentum, rhs[d], opts, &vk[d]);
    if (!res.report.converged)
      throw std::runtime_error("momentum solve did not converge (relative residual " +
                               std::to_string(res.report.relative_residual) + ")");
    worst.iterations += res.report.iterations;
    worst.relative_residual = std::max(worst.relative_residual, res.report.relative_residual);
    v_star[d] = std::move(res.x);
  }
  if (report) *report = worst;
  return v_star;
}

Eigen::VectorXd Solver::divergence(const std::array<Eigen::VectorXd, 2>& vel) const {
  const SpatialMatrices& s = *spatial_;
  const int npsi = order_.n_psi();
  const int nphi = order_.n_phi();
  const int ng = order_.n_gamma();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(pressure_size());
  for (int t = 0; t < mesh_.num_triangles(); ++t) {
    auto o = block_of(out, t, nphi, ng);
    for (int e = 0; e < 3; ++e) {
      const int q = dual_.triangle_quads[t][e];
      for (int d = 0; d < 2; ++d) o.noalias() += s.divergence[t][e][d] * block_of(vel[d], q, npsi, ng);
    }
  }
  return out;
}

std::array<Eigen::VectorXd, 2> Solver::gradient(const Eigen::VectorXd& pressure) const {
  const SpatialMatrices& s = *spatial_;
  const int npsi = order_.n_psi();
  const int nphi = order_.n_phi();
  const int ng = order_.n_gamma();
  std::array<Eigen::VectorXd, 2> out{Eigen::VectorXd::Zero(velocity_size()), Eigen::VectorXd::Zero(velocity_size())};
  for (int q = 0; q < dual_.num_quads(); ++q)
    for (int h = 0; h < 2; ++h) {
      const auto ph = block_of(pressure, dual_.quads[q].half[h].triangle, nphi, ng);
      for (int d = 0; d < 2; ++d) block_of(out[d], q, npsi, ng).noalias() += s.gradient[q][h][d] * ph;
    }
  return out;
}

PressureRhs Solver::assemble_pressure_system(const std::array<Eigen::VectorXd, 2>& v_star, double dt) const {
  const Eigen::VectorXd div = divergence(v_star);
  const int nphi = order_.n_phi();
  const int ng = order_.n_gamma();
  const int nt = mesh_.num_triangles();
  PressureRhs out;
  out.rhs.assign(ng, Eigen::VectorXd(nt * nphi));
  for (int t = 0; t < nt; ++t) {
    const auto d = block_of(div, t, nphi, ng);
    for (int b = 0; b < ng; ++b) out.rhs[b].segment(t * nphi, nphi) = -d.col(b) / dt;
  }
  return out;
}

std::vector<Eigen::VectorXd> Solver::solve_pressure(const PressureRhs& rhs, CgReport* worst, int* iterations) const {
  SolveOptions opts;
  opts.tol = tol_.pressure;
  opts.max_iter = tol_.max_iterations;
  opts.project_constant = true;
  opts.preconditioner = &pressure_precond_;
  std::vector<Eigen::VectorXd> q;
  CgReport agg;
  agg.converged = true;
  for (const auto& b : rhs.rhs) {
    SolveResult res = cg_solve(pressure_op_, b, opts);
    if (!res.report.converged)
      throw std::runtime_error("pressure solve did not converge (relative residual " +
                               std::to_string(res.report.relative_residual) + ")");
    agg.iterations += res.report.iterations;
    agg.relative_residual = std::max(agg.relative_residual, res.report.relative_residual);
    q.push_back(std::move(res.x));
  }
  if (worst) *worst = agg;
  if (iterations) *iterations = agg.iterations;
  return q;
}

std::array<Eigen::VectorXd, 2> Solver::velocity_correction(const std::array<Eigen::VectorXd, 2>& v_star,
                                                           const std::vector<Eigen::VectorXd>& q, double dt) const {
  const SpatialMatrices& s = *spatial_;
  const int npsi = order_.n_psi();
  const int nphi = order_.n_phi();
  const int ng = order_.n_gamma();
  std::array<Eigen::VectorXd, 2> out = v_star;
  Eigen::MatrixXd q0(nphi, ng), q1(nphi, ng);
  for (int quad = 0; quad < dual_.num_quads(); ++quad) {
    const int t0 = dual_.quads[quad].half[0].triangle;
    const int t1 = dual_.quads[quad].half[1].triangle;
    for (int b = 0; b < ng; ++b) {
      q0.col(b) = q[b].segment(t0 * nphi, nphi);
      q1.col(b) = q[b].segment(t1 * nphi, nphi);
    }
    for (int d = 0; d < 2; ++d)
      block_of(out[d], quad, npsi, ng).noalias() -=
          dt * s.mass_inv[quad] * (s.gradient[quad][0][d] * q0 + s.gradient[quad][1][d] * q1);
  }
  return out;
}

Eigen::VectorXd Solver::pressure_increment(const std::vector<Eigen::VectorXd>& q) const {
  const int nphi = order_.n_phi();
  const int ng = order_.n_gamma();
  Eigen::VectorXd dp(pressure_size());
  Eigen::MatrixXd qt(nphi, ng);
  for (int t = 0; t < mesh_.num_triangles(); ++t) {
    for (int b = 0; b < ng; ++b) qt.col(b) = q[b].segment(t * nphi, nphi);
    block_of(dp, t, nphi, ng) = qt * time_transform_.transpose();
  }
  return dp;
}

SpaceTimeState Solver::advance_time_step(const SpaceTimeState& state, double dt, StepReport* report) const {
  if (!(dt > 0.0)) throw std::invalid_argument("advance_time_step: dt must be positive");
  const int ng = order_.n_gamma();
  const ElementMatrices em = assemble_element_matrices(*tensors_, spatial_, fluid_.nu, dt);
  const BlockJacobi precond(em.momentum);

  // Step 1: start every temporal node from the previous slab's final values.
  std::array<Eigen::VectorXd, 2> v{replicate(state.velocity_end(0), order_.n_psi(), ng),
                                   replicate(state.velocity_end(1), order_.n_psi(), ng)};
  Eigen::VectorXd p = replicate(state.pressure_end(), order_.n_phi(), ng);

  StepReport rep;
  rep.dt = dt;
  for (int k = 0; k < picard_.iterations; ++k) {
    CgReport mom;
    const auto v_star = momentum_predictor(state, v, p, em, &precond, &mom);
    const PressureRhs rhs = assemble_pressure_system(v_star, dt);
    CgReport pres;
    int pit = 0;
    const auto q = solve_pressure(rhs, &pres, &pit);
    auto v_next = velocity_correction(v_star, q, dt);
    p += pressure_increment(q);

    double change = 0.0;
    for (int d = 0; d < 2; ++d) change = std::max(change, (v_next[d] - v[d]).cwiseAbs().maxCoeff());
    v = std::move(v_next);
    rep.picard_changes.push_back(change);
    rep.divergence_norms.push_back(divergence(v).cwiseAbs().maxCoeff());
    rep.momentum_iterations += mom.iterations;
    rep.pressure_iterations += pit;
    rep.max_pressure_residual = std::max(rep.max_pressure_residual, pres.relative_residual);
  }

  SpaceTimeState next;
  next.order = order_;
  next.t0 = state.t1;
  next.t1 = state.t1 + dt;
  next.velocity = std::move(v);
  next.pressure = std::move(p);
  if (report) *report = std::move(rep);
  return next;
}

double Solver::kinetic_energy(const SpaceTimeState& state) const {
  const int npsi = order_.n_psi();
  double e = 0.0;
  for (int d = 0; d < 2; ++d) {
    const Eigen::VectorXd v = state.velocity_end(d);
    for (int q = 0; q < dual_.num_quads(); ++q) {
      const auto vq = v.segment(q * npsi, npsi);
      e += 0.5 * vq.dot(spatial_->mass[q] * vq);
    }
  }
  return e;
}

Vec2 Solver::velocity_at(const SpaceTimeState& state, int quad, int half, const Vec2& local, double tau) const {
  const ReferenceTensors& rt = *tensors_;
  const BasisValues b = rt.triangle.eval_unchecked(local);
  const Eigen::VectorXd g = rt.temporal.eval(tau).values;
  const int npsi = order_.n_psi();
  const int ng = order_.n_gamma();
  const auto u = block_of(state.velocity[0], quad, npsi, ng);
  const auto v = block_of(state.velocity[1], quad, npsi, ng);
  Vec2 r = Vec2::Zero();
  for (int m = 0; m < rt.triangle.size(); ++m) {
    const int k = rt.square.square_index(half, m);
    r.x() += b.values[m] * u.row(k).dot(g);
    r.y() += b.values[m] * v.row(k).dot(g);
  }
  return r;
}

double Solver::pressure_at(const SpaceTimeState& state, int triangle, const Vec2& ref, double tau) const {
  const ReferenceTensors& rt = *tensors_;
  const BasisValues b = rt.triangle.eval_unchecked(ref);
  const Eigen::VectorXd g = rt.temporal.eval(tau).values;
  const auto pt = block_of(state.pressure, triangle, order_.n_phi(), order_.n_gamma());
  return b.values.dot(pt * g);
}

}  // namespace stdg
