#pragma once

#include "stdg/basis.hpp"
#include "stdg/kernels.hpp"
#include "stdg/linsys.hpp"
#include "stdg/mesh.hpp"

#include <array>
#include <functional>
#include <memory>
#include <vector>

namespace stdg {

/// Normalised fluid: nu = mu / rho, pressure already divided by rho.
struct FluidParams {
  double nu = 0.1;
  /// S(v, x, t); empty means no source.
  std::function<Vec2(const Vec2& v, const Vec2& x, double t)> source;
};

/// Coefficients of one time slab [t0, t1]. Pressure: per triangle n_phi x
/// n_gamma, velocity: per dual element n_psi x n_gamma per component, both
/// stored spatial-major (index spatial * n_gamma + temporal).
struct SpaceTimeState {
  DiscretizationOrder order;
  double t0 = 0.0;
  double t1 = 0.0;
  Eigen::VectorXd pressure;
  std::array<Eigen::VectorXd, 2> velocity;

  /// Spatial coefficients at the end of the slab (tau = 1).
  Eigen::VectorXd pressure_end() const;
  Eigen::VectorXd velocity_end(int component) const;
};

struct TimeStepControl {
  double cfl = 0.4;
  double t_end = 0.1;
  double dt_max = 0.01;  // used when the velocity vanishes everywhere
};

struct PicardConfig {
  int iterations = 3;
  bool log_residuals = false;
};

struct SolverTolerances {
  double momentum = 1e-12;
  double pressure = 1e-10;
  int max_iterations = 5000;
  double penalty = kDefaultPenalty;
};

struct StepReport {
  double dt = 0.0;
  std::vector<double> picard_changes;      // max |v^{k+1} - v^k| per iteration
  std::vector<double> divergence_norms;    // max |D v^{k+1}| per iteration
  int momentum_iterations = 0;
  int pressure_iterations = 0;
  double max_pressure_residual = 0.0;
};

/// Exact fields used for initial data and error norms.
struct FlowSample {
  double u = 0.0;
  double v = 0.0;
  double p = 0.0;
};
using FlowField = std::function<FlowSample(const Vec2& x, double t)>;

/// Right-hand side for the Poisson solves of one Picard iteration: one
/// spatial vector per temporal basis function.
struct PressureRhs {
  std::vector<Eigen::VectorXd> rhs;
};

class Solver {
 public:
  /// Builds the periodic dual grid, geometry, reference tensors and the
  /// constant spatial operators. Non-periodic meshes are rejected.
  Solver(PrimaryMesh mesh, const DiscretizationOrder& order, FluidParams fluid, PicardConfig picard = {},
         SolverTolerances tol = {});

  const PrimaryMesh& mesh() const { return mesh_; }
  const DualMesh& dual() const { return dual_; }
  const ElementGeometry& geometry() const { return geom_; }
  const ReferenceTensors& tensors() const { return *tensors_; }
  const SpatialMatrices& spatial() const { return *spatial_; }
  const DiscretizationOrder& order() const { return order_; }
  const FluidParams& fluid() const { return fluid_; }
  const PicardConfig& picard() const { return picard_; }
  const SolverTolerances& tolerances() const { return tol_; }

  int velocity_size() const { return dual_.num_quads() * order_.n_psi_st(); }
  int pressure_size() const { return mesh_.num_triangles() * order_.n_phi_st(); }

  /// Element-wise L2 projection at `t`, replicated over the temporal nodes.
  SpaceTimeState project_initial_condition(const FlowField& fields, double t = 0.0) const;

  /// max over dual segment nodes of 2 max(|v+.n|, |v-.n|) at the slab end.
  double max_signal_speed(const SpaceTimeState& state) const;
  double compute_timestep(const SpaceTimeState& state, const TimeStepControl& control) const;

  /// Step 2a: solves (M kron Tk + nu dt K kron Tm) v* = rhs with convection
  /// and pressure taken from the current iterate.
  std::array<Eigen::VectorXd, 2> momentum_predictor(const SpaceTimeState& previous,
                                                    const std::array<Eigen::VectorXd, 2>& velocity_iterate,
                                                    const Eigen::VectorXd& pressure_iterate,
                                                    const ElementMatrices& matrices, const BlockJacobi* precond,
                                                    CgReport* report = nullptr) const;

  /// Step 2b operator sum_d G_d^T M^{-1} G_d (= -D M^{-1} G), block n_phi,
  /// self plus at most three neighbours per row. Built once per solver.
  const BlockSparseMatrix& pressure_operator() const { return pressure_op_; }
  /// Right-hand sides -D v* / dt for each temporal coefficient.
  PressureRhs assemble_pressure_system(const std::array<Eigen::VectorXd, 2>& v_star, double dt) const;
  /// Solves the Poisson systems; returns the transformed correction q per
  /// temporal coefficient.
  std::vector<Eigen::VectorXd> solve_pressure(const PressureRhs& rhs, CgReport* worst = nullptr,
                                              int* iterations = nullptr) const;

  /// Step 2c: v = v* - dt M^{-1} G q.
  std::array<Eigen::VectorXd, 2> velocity_correction(const std::array<Eigen::VectorXd, 2>& v_star,
                                                     const std::vector<Eigen::VectorXd>& q, double dt) const;
  /// Delta p from q: Delta P = Q (Tm^{-1} Tk)^T per triangle.
  Eigen::VectorXd pressure_increment(const std::vector<Eigen::VectorXd>& q) const;

  /// Weak divergence D v for every temporal coefficient (pressure layout).
  Eigen::VectorXd divergence(const std::array<Eigen::VectorXd, 2>& velocity) const;
  /// Pressure-gradient operator (G kron I) applied to a pressure vector; one
  /// velocity-layout vector per component.
  std::array<Eigen::VectorXd, 2> gradient(const Eigen::VectorXd& pressure) const;

  /// Steps 1-3 for one slab of length dt starting at state.t1.
  SpaceTimeState advance_time_step(const SpaceTimeState& state, double dt, StepReport* report = nullptr) const;

  /// 0.5 int |v|^2 at the end of the slab, exact through the mass matrices.
  double kinetic_energy(const SpaceTimeState& state) const;

  /// Velocity and pressure of a state at the end of its slab, evaluated at a
  /// point given by dual element and half-local coordinates.
  Vec2 velocity_at(const SpaceTimeState& state, int quad, int half, const Vec2& local, double tau = 1.0) const;
  double pressure_at(const SpaceTimeState& state, int triangle, const Vec2& ref, double tau = 1.0) const;

 private:
  std::array<Eigen::VectorXd, 2> convection(const std::array<Eigen::VectorXd, 2>& v) const;

  PrimaryMesh mesh_;
  DiscretizationOrder order_;
  FluidParams fluid_;
  PicardConfig picard_;
  SolverTolerances tol_;
  DualMesh dual_;
  ElementGeometry geom_;
  std::shared_ptr<const ReferenceTensors> tensors_;
  std::shared_ptr<const SpatialMatrices> spatial_;
  BlockSparseMatrix pressure_op_;
  BlockJacobi pressure_precond_;
  Eigen::MatrixXd time_transform_;  // Tm^{-1} Tk
};

}  // namespace stdg
