#pragma once

#include "stdg/polynomial.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stdg {

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Rect {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
};

/// Primary-grid edge. The left triangle traverses v[0] -> v[1] counterclockwise;
/// a boundary edge has only a left triangle.
struct Edge {
  std::array<int, 2> v{-1, -1};
  int left = -1;
  int right = -1;
  int left_local = -1;   // local edge index inside the left triangle
  int right_local = -1;  // local edge index inside the right triangle
  int partner = -1;      // periodic partner edge, boundary edges only

  bool is_boundary() const { return right < 0; }
};

/// Triangular grid carrying the pressure. Local edge k of a triangle runs from
/// its vertex k to vertex (k + 1) % 3.
struct PrimaryMesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Edge> edges;
  std::vector<std::array<int, 3>> triangle_edges;
  std::vector<std::array<int, 3>> triangle_edge_signs;  // +1 when the triangle is the edge's left side

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }
  int num_periodic_pairs() const;
  double triangle_area(int t) const;
  Vec2 barycenter(int t) const;
};

/// Builds edges and validates a mesh from raw connectivity. Edges are numbered
/// in order of first appearance scanning triangles, then local edges 0..2.
/// `periodic_pairs` refers to that numbering.
PrimaryMesh make_mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
                      const std::vector<std::pair<int, int>>& periodic_pairs = {});

/// n x n cells on `domain`, each split along its (x0,y0)-(x1,y1) diagonal.
/// Opposite boundary edges are always paired for periodic use.
PrimaryMesh generate_structured_mesh(int n, const Rect& domain);

PrimaryMesh load_mesh(const std::filesystem::path& path);
void write_mesh(const PrimaryMesh& mesh, const std::filesystem::path& path);

/// FNV-1a over vertex coordinates and connectivity.
std::uint64_t mesh_checksum(const PrimaryMesh& mesh);

/// One half of a dual element: the sub-triangle (barycenter, v_e, v_{e+1}) of
/// a primary triangle, where e is the local index of the straddled edge.
struct DualHalf {
  int triangle = -1;
  int local_edge = -1;
  std::array<Vec2, 3> corners;
};

/// Edge-based dual element. Half 0 lies in the edge's left triangle and maps to
/// the reference sub-triangle T_I; half 1 maps to T_II. For a periodic pair the
/// halves sit on opposite sides of the domain. A non-periodic boundary edge
/// yields a degenerate element with only half 0.
struct DualQuad {
  int edge = -1;
  int partner = -1;
  std::array<DualHalf, 2> half;
  std::array<int, 4> segments{-1, -1, -1, -1};  // half 0 edges 0,2 then half 1 edges 0,2

  bool degenerate() const { return half[1].triangle < 0; }
  int num_halves() const { return degenerate() ? 1 : 2; }
};

struct SegmentSide {
  int quad = -1;
  int half = -1;
  int local_edge = -1;  // 0 runs barycenter -> vertex, 2 runs vertex -> barycenter
};

/// Interface between two dual elements: the segment from a triangle's
/// barycenter to one of its vertices. side[0] owns the stored normal direction.
struct DualSegment {
  std::array<SegmentSide, 2> side;
  int triangle = -1;
  int vertex_local = -1;
};

struct DualMesh {
  std::vector<DualQuad> quads;
  std::vector<DualSegment> segments;
  std::vector<int> edge_to_quad;
  std::vector<std::array<int, 3>> triangle_quads;  // dual element of each local edge
  std::vector<std::array<int, 3>> triangle_halves; // which half of it lies in the triangle
  bool periodic = false;

  int num_quads() const { return static_cast<int>(quads.size()); }
  int num_segments() const { return static_cast<int>(segments.size()); }
  double half_area(int q, int h) const;
  double quad_area(int q) const;
};

DualMesh build_dual_grid(const PrimaryMesh& mesh, bool periodic);

struct AffineMap {
  Vec2 origin = Vec2::Zero();
  Eigen::Matrix2d jac = Eigen::Matrix2d::Identity();
  Eigen::Matrix2d inv = Eigen::Matrix2d::Identity();
  double det = 1.0;

  static AffineMap from_vertices(const Vec2& a, const Vec2& b, const Vec2& c);
  Vec2 map(const Vec2& ref) const { return origin + jac * ref; }
  Vec2 unmap(const Vec2& x) const { return inv * (x - origin); }
};

struct ElementGeometry {
  std::vector<AffineMap> triangles;
  std::vector<std::array<Vec2, 3>> triangle_edge_normals;  // outward
  std::vector<std::array<double, 3>> triangle_edge_lengths;
  std::vector<double> inradius;
  std::vector<std::array<AffineMap, 2>> quad_halves;
  std::vector<Vec2> segment_normals;  // outward from side[0]
  std::vector<double> segment_lengths;
  std::vector<double> segment_h;      // smallest adjacent half-triangle height over the segment
  double h_min = 0.0;
};

ElementGeometry compute_geometry(const PrimaryMesh& mesh, const DualMesh& dual);

}  // namespace stdg
