#pragma once

#include "stdg/basis.hpp"
#include "stdg/linsys.hpp"
#include "stdg/mesh.hpp"

#include <array>
#include <filesystem>
#include <memory>
#include <vector>

namespace stdg {

/// Exact integrals of the nodal bases over the universal reference elements.
/// Spatial tensors live on the reference triangle with the degree-p triangle
/// basis; both halves of the split square reuse them through the index maps of
/// SquareBasis. `e` indexes the sub-triangle (barycenter, V_e, V_{e+1}) of the
/// reference triangle, which is where half-quad velocity meets pressure.
struct ReferenceTensors {
  DiscretizationOrder order;
  TriangleBasis triangle;
  SquareBasis square;
  TemporalBasis temporal;

  Eigen::MatrixXd mass;                                   // int phi_a phi_b
  std::array<Eigen::MatrixXd, 2> grad_mass;               // [r](a,b) = int d_r phi_a phi_b
  std::array<std::array<Eigen::MatrixXd, 2>, 2> stiffness; // [r][s](a,b) = int d_r phi_a d_s phi_b
  std::array<std::vector<int>, 3> edge_nodes;             // triangle nodes along local edge e
  Eigen::MatrixXd line_mass;                              // int_0^1 l_c l_d on p+1 equidistant nodes
  std::array<std::array<Eigen::MatrixXd, 2>, 3> edge_grad; // [e][r](a,c) = int_0^1 d_r phi_a(edge_e(t)) l_c(t)

  // Half-quad velocity (local basis m) against pressure (basis n), in the
  // reference triangle coordinates of the pressure element.
  std::array<std::array<Eigen::MatrixXd, 2>, 3> gradient_coupling;   // [e][r](m,n) = int_sub psi_m d_r phi_n
  std::array<std::array<Eigen::MatrixXd, 2>, 3> divergence_coupling; // [e][r](n,m) = int_sub d_r phi_n psi_m
  std::array<Eigen::MatrixXd, 3> edge_coupling;                      // [e](m,n) = int_0^1 psi_m phi_n on edge e

  Eigen::MatrixXd time_mass;       // int gamma_a gamma_b
  Eigen::MatrixXd time_stiffness;  // gamma_a(1) gamma_b(1) - int gamma_a' gamma_b
  Eigen::VectorXd trace_start;     // gamma(0)
  Eigen::VectorXd trace_end;       // gamma(1)

  explicit ReferenceTensors(const DiscretizationOrder& o)
      : order(o), triangle(o.p), square(o.p), temporal(o.p_gamma) {}
};

ReferenceTensors precompute_reference_tensors(const DiscretizationOrder& order);

/// Binary cache keyed by (p, p_gamma) with a version header.
void save_reference_tensors(const ReferenceTensors& t, const std::filesystem::path& path);
ReferenceTensors load_reference_tensors(const std::filesystem::path& path);

/// Quantities needed on one dual interface segment. Node c runs from the
/// triangle barycenter (c = 0) to the vertex (c = p) and is shared by both sides.
struct SegmentTrace {
  std::array<int, 2> quad{-1, -1};
  std::array<std::vector<int>, 2> nodes;  // square-basis index of each segment node per side
  Vec2 normal = Vec2::Zero();              // outward from side 0
  double length = 0.0;
  double penalty = 0.0;
  Eigen::MatrixXd weights;                     // length * line_mass
  std::array<Eigen::MatrixXd, 2> normal_grad;  // [side](k,c) = int (grad psi_k . n) l_c ds
};

/// Geometry-dependent spatial matrices. Built by contracting ReferenceTensors
/// with affine-map coefficients only.
struct SpatialMatrices {
  int n_psi = 0;
  int n_phi = 0;
  std::vector<Eigen::MatrixXd> mass;
  std::vector<Eigen::MatrixXd> mass_inv;
  std::vector<std::array<Eigen::MatrixXd, 2>> convection;  // [d](a,l) = int d_d psi_a psi_l
  BlockSparseMatrix stiffness;                              // interior-penalty viscous operator
  std::vector<std::array<std::array<Eigen::MatrixXd, 2>, 2>> gradient;   // [quad][half][d]
  std::vector<std::array<std::array<Eigen::MatrixXd, 2>, 3>> divergence; // [tri][local edge][d]
  std::vector<SegmentTrace> segments;
  std::vector<std::vector<Vec2>> node_positions;  // physical velocity nodes per quad
};

inline constexpr double kDefaultPenalty = 1.0;

std::shared_ptr<const SpatialMatrices> assemble_spatial_matrices(const ReferenceTensors& tensors,
                                                                 const PrimaryMesh& mesh, const DualMesh& dual,
                                                                 const ElementGeometry& geom,
                                                                 double penalty = kDefaultPenalty);

/// Space-time operators for one slab of length dt.
struct ElementMatrices {
  double nu = 0.0;
  double dt = 0.0;
  std::shared_ptr<const SpatialMatrices> spatial;
  std::vector<Eigen::MatrixXd> mass_st;  // kron(M_q, time_stiffness)
  BlockSparseMatrix viscous_st;          // nu dt kron(K, time_mass)
  BlockSparseMatrix momentum;            // mass_st + viscous_st
};

ElementMatrices assemble_element_matrices(const ReferenceTensors& tensors,
                                          std::shared_ptr<const SpatialMatrices> spatial, double nu, double dt);
ElementMatrices assemble_element_matrices(const ReferenceTensors& tensors, const PrimaryMesh& mesh,
                                          const DualMesh& dual, const ElementGeometry& geom, double nu, double dt);

/// (A kron B)(a*nb + i, b*nb + j) = A(a,b) B(i,j): spatial-major ordering.
Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Local Lax-Friedrichs normal flux of v (x) v at one point, signal speed
/// 2 max(|vL.n|, |vR.n|).
Vec2 rusanov_flux(const Vec2& left, const Vec2& right, const Vec2& n);

/// Space-time weak contribution of nodal normal fluxes on a segment:
/// returns (p+1) x n_gamma entries weights * flux * time_mass, to be added to
/// side 0 and subtracted from side 1. Linear in `flux`.
Eigen::MatrixXd contract_flux_terms(const ReferenceTensors& tensors, const SegmentTrace& segment,
                                    const Eigen::MatrixXd& flux);

}  // namespace stdg
