#include "stdg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>

namespace stdg {

namespace {

std::string fmt_tri(int t) { return "triangle " + std::to_string(t); }

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

}  // namespace

int PrimaryMesh::num_periodic_pairs() const {
  int n = 0;
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (edges[e].partner > static_cast<int>(e)) ++n;
  return n;
}

double PrimaryMesh::triangle_area(int t) const {
  const auto& tri = triangles[t];
  return 0.5 * cross(vertices[tri[1]] - vertices[tri[0]], vertices[tri[2]] - vertices[tri[0]]);
}

Vec2 PrimaryMesh::barycenter(int t) const {
  const auto& tri = triangles[t];
  return (vertices[tri[0]] + vertices[tri[1]] + vertices[tri[2]]) / 3.0;
}

PrimaryMesh make_mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
                      const std::vector<std::pair<int, int>>& periodic_pairs) {
  PrimaryMesh m;
  m.vertices = std::move(vertices);
  m.triangles = std::move(triangles);
  const int nv = m.num_vertices();
  const int nt = m.num_triangles();
  if (nt == 0) throw MeshError("mesh has no triangles");

  for (int t = 0; t < nt; ++t) {
    for (int k = 0; k < 3; ++k)
      if (m.triangles[t][k] < 0 || m.triangles[t][k] >= nv)
        throw MeshError(fmt_tri(t) + " references vertex " + std::to_string(m.triangles[t][k]) +
                        " out of range");
    const auto& tri = m.triangles[t];
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw MeshError(fmt_tri(t) + " repeats a vertex");
    if (!(m.triangle_area(t) > 0.0))
      throw MeshError(fmt_tri(t) + " has non-positive area (clockwise or degenerate)");
  }

  std::map<std::pair<int, int>, int> lookup;
  m.triangle_edges.assign(nt, {-1, -1, -1});
  m.triangle_edge_signs.assign(nt, {0, 0, 0});
  for (int t = 0; t < nt; ++t) {
    for (int k = 0; k < 3; ++k) {
      const int a = m.triangles[t][k];
      const int b = m.triangles[t][(k + 1) % 3];
      const auto key = std::minmax(a, b);
      auto it = lookup.find(key);
      if (it == lookup.end()) {
        Edge e;
        e.v = {a, b};
        e.left = t;
        e.left_local = k;
        lookup.emplace(key, m.num_edges());
        m.triangle_edges[t][k] = m.num_edges();
        m.triangle_edge_signs[t][k] = 1;
        m.edges.push_back(e);
        continue;
      }
      Edge& e = m.edges[it->second];
      if (e.right >= 0)
        throw MeshError(fmt_tri(t) + ": edge (" + std::to_string(a) + "," + std::to_string(b) +
                        ") already has two adjacent triangles");
      if (e.v[0] != b)
        throw MeshError(fmt_tri(t) + ": orientation inconsistent with " + fmt_tri(e.left));
      e.right = t;
      e.right_local = k;
      m.triangle_edges[t][k] = it->second;
      m.triangle_edge_signs[t][k] = -1;
    }
  }

  const int ne = m.num_edges();
  for (const auto& [ea, eb] : periodic_pairs) {
    if (ea < 0 || ea >= ne || eb < 0 || eb >= ne)
      throw MeshError("periodic pair (" + std::to_string(ea) + "," + std::to_string(eb) +
                      ") references an edge out of range");
    if (ea == eb) throw MeshError("periodic pair pairs edge " + std::to_string(ea) + " with itself");
    Edge& a = m.edges[ea];
    Edge& b = m.edges[eb];
    if (!a.is_boundary() || !b.is_boundary())
      throw MeshError("periodic pair (" + std::to_string(ea) + "," + std::to_string(eb) +
                      ") includes an interior edge");
    if (a.partner >= 0 || b.partner >= 0)
      throw MeshError("edge " + std::to_string(a.partner >= 0 ? ea : eb) + " paired twice");
    const Vec2 da = m.vertices[a.v[1]] - m.vertices[a.v[0]];
    const Vec2 db = m.vertices[b.v[1]] - m.vertices[b.v[0]];
    if (std::abs(da.norm() - db.norm()) > 1e-12 * std::max(da.norm(), db.norm()))
      throw MeshError("periodic pair (" + std::to_string(ea) + "," + std::to_string(eb) +
                      ") has unequal edge lengths");
    // Both edges are traversed counterclockwise by their owners, so a translated
    // copy runs in the opposite direction.
    const Vec2 s0 = m.vertices[b.v[1]] - m.vertices[a.v[0]];
    const Vec2 s1 = m.vertices[b.v[0]] - m.vertices[a.v[1]];
    if ((s0 - s1).norm() > 1e-10 * std::max(1.0, s0.norm()))
      throw MeshError("periodic pair (" + std::to_string(ea) + "," + std::to_string(eb) +
                      ") is not a translation");
    a.partner = eb;
    b.partner = ea;
  }
  return m;
}

PrimaryMesh generate_structured_mesh(int n, const Rect& d) {
  if (n < 1) throw MeshError("generate_structured_mesh: n must be >= 1");
  if (!(d.x1 > d.x0) || !(d.y1 > d.y0)) throw MeshError("generate_structured_mesh: degenerate rectangle");
  std::vector<Vec2> verts;
  verts.reserve((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      verts.emplace_back(d.x0 + (d.x1 - d.x0) * i / n, d.y0 + (d.y1 - d.y0) * j / n);
  auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  std::vector<std::array<int, 3>> tris;
  tris.reserve(2 * n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      tris.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      tris.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  // Edge ids are only known after make_mesh numbers them; build once, then pair.
  PrimaryMesh raw = make_mesh(verts, tris);
  std::map<std::pair<int, int>, int> lookup;
  for (int e = 0; e < raw.num_edges(); ++e) lookup[std::minmax(raw.edges[e].v[0], raw.edges[e].v[1])] = e;
  auto edge_of = [&](int a, int b) { return lookup.at(std::minmax(a, b)); };
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i) pairs.emplace_back(edge_of(vid(i, 0), vid(i + 1, 0)), edge_of(vid(i, n), vid(i + 1, n)));
  for (int j = 0; j < n; ++j) pairs.emplace_back(edge_of(vid(0, j), vid(0, j + 1)), edge_of(vid(n, j), vid(n, j + 1)));
  return make_mesh(std::move(verts), std::move(tris), pairs);
}

PrimaryMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file " + path.string());
  std::ostringstream clean;
  std::string line;
  while (std::getline(in, line)) {
    if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
    clean << line << '\n';
  }
  std::istringstream tok(clean.str());
  auto fail = [&](const std::string& what) -> MeshError {
    return MeshError(path.string() + ": parse error: " + what);
  };
  long nv = 0, nt = 0, np = 0;
  if (!(tok >> nv >> nt >> np)) throw fail("expected header 'NV NT NPERIODIC'");
  if (nv < 0 || nt < 0 || np < 0) throw fail("negative count in header");
  std::vector<Vec2> verts(nv);
  for (long i = 0; i < nv; ++i) {
    double x, y;
    if (!(tok >> x >> y)) throw fail("vertex " + std::to_string(i));
    verts[i] = Vec2(x, y);
  }
  std::vector<std::array<int, 3>> tris(nt);
  for (long t = 0; t < nt; ++t)
    if (!(tok >> tris[t][0] >> tris[t][1] >> tris[t][2])) throw fail(fmt_tri(static_cast<int>(t)));
  std::vector<std::pair<int, int>> pairs(np);
  for (long k = 0; k < np; ++k)
    if (!(tok >> pairs[k].first >> pairs[k].second)) throw fail("periodic pair " + std::to_string(k));
  std::string extra;
  if (tok >> extra) throw fail("trailing data '" + extra + "'");
  return make_mesh(std::move(verts), std::move(tris), pairs);
}

void write_mesh(const PrimaryMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write mesh file " + path.string());
  out << "# NV NT NPERIODIC\n";
  out << mesh.num_vertices() << ' ' << mesh.num_triangles() << ' ' << mesh.num_periodic_pairs() << '\n';
  out << std::setprecision(17);
  for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << '\n';
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (int e = 0; e < mesh.num_edges(); ++e)
    if (mesh.edges[e].partner > e) out << e << ' ' << mesh.edges[e].partner << '\n';
  if (!out) throw MeshError("write failed for " + path.string());
}

std::uint64_t mesh_checksum(const PrimaryMesh& mesh) {
  std::uint64_t h = 1469598103934665603ULL;
  auto feed = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& v : mesh.vertices) {
    const double xy[2] = {v.x(), v.y()};
    feed(xy, sizeof(xy));
  }
  for (const auto& t : mesh.triangles) feed(t.data(), sizeof(int) * 3);
  for (const auto& e : mesh.edges) feed(&e.partner, sizeof(int));
  return h;
}

double DualMesh::half_area(int q, int h) const {
  const auto& half = quads[q].half[h];
  if (half.triangle < 0) return 0.0;
  const auto& c = half.corners;
  return 0.5 * cross(c[1] - c[0], c[2] - c[0]);
}

double DualMesh::quad_area(int q) const { return half_area(q, 0) + half_area(q, 1); }

DualMesh build_dual_grid(const PrimaryMesh& mesh, bool periodic) {
  DualMesh d;
  d.periodic = periodic;
  const int nt = mesh.num_triangles();
  d.edge_to_quad.assign(mesh.num_edges(), -1);
  d.triangle_quads.assign(nt, {-1, -1, -1});
  d.triangle_halves.assign(nt, {-1, -1, -1});

  auto make_half = [&](int t, int e) {
    DualHalf h;
    h.triangle = t;
    h.local_edge = e;
    const auto& tri = mesh.triangles[t];
    h.corners = {mesh.barycenter(t), mesh.vertices[tri[e]], mesh.vertices[tri[(e + 1) % 3]]};
    return h;
  };

  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& edge = mesh.edges[e];
    if (d.edge_to_quad[e] >= 0) continue;
    DualQuad q;
    q.edge = e;
    q.half[0] = make_half(edge.left, edge.left_local);
    if (!edge.is_boundary()) {
      q.half[1] = make_half(edge.right, edge.right_local);
    } else if (periodic) {
      if (edge.partner < 0) throw MeshError("boundary edge " + std::to_string(e) + " has no periodic partner");
      const Edge& other = mesh.edges[edge.partner];
      q.partner = edge.partner;
      q.half[1] = make_half(other.left, other.left_local);
    }
    const int id = d.num_quads();
    d.edge_to_quad[e] = id;
    if (q.partner >= 0) d.edge_to_quad[q.partner] = id;
    for (int h = 0; h < q.num_halves(); ++h) {
      d.triangle_quads[q.half[h].triangle][q.half[h].local_edge] = id;
      d.triangle_halves[q.half[h].triangle][q.half[h].local_edge] = h;
    }
    d.quads.push_back(q);
  }

  // Segment (t, v) joins the barycenter of t to its local vertex v. It is edge 0
  // of the half built on local edge v and edge 2 of the half on local edge v-1.
  for (int t = 0; t < nt; ++t) {
    for (int v = 0; v < 3; ++v) {
      const int ea = v;
      const int eb = (v + 2) % 3;
      DualSegment s;
      s.triangle = t;
      s.vertex_local = v;
      s.side[0] = {d.triangle_quads[t][ea], d.triangle_halves[t][ea], 0};
      s.side[1] = {d.triangle_quads[t][eb], d.triangle_halves[t][eb], 2};
      const int id = d.num_segments();
      d.quads[s.side[0].quad].segments[2 * s.side[0].half + 0] = id;
      d.quads[s.side[1].quad].segments[2 * s.side[1].half + 1] = id;
      d.segments.push_back(s);
    }
  }
  return d;
}

AffineMap AffineMap::from_vertices(const Vec2& a, const Vec2& b, const Vec2& c) {
  AffineMap m;
  m.origin = a;
  m.jac.col(0) = b - a;
  m.jac.col(1) = c - a;
  m.det = m.jac.determinant();
  if (!(m.det > 0.0)) throw MeshError("non-positive Jacobian determinant");
  m.inv = m.jac.inverse();
  return m;
}

ElementGeometry compute_geometry(const PrimaryMesh& mesh, const DualMesh& dual) {
  ElementGeometry g;
  const int nt = mesh.num_triangles();
  g.triangles.resize(nt);
  g.triangle_edge_normals.resize(nt);
  g.triangle_edge_lengths.resize(nt);
  g.inradius.resize(nt);
  g.h_min = std::numeric_limits<double>::infinity();
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    std::array<Vec2, 3> x{mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]};
    try {
      g.triangles[t] = AffineMap::from_vertices(x[0], x[1], x[2]);
    } catch (const MeshError&) {
      throw MeshError(fmt_tri(t) + " has non-positive Jacobian");
    }
    double perimeter = 0.0;
    for (int k = 0; k < 3; ++k) {
      const Vec2 d = x[(k + 1) % 3] - x[k];
      const double len = d.norm();
      g.triangle_edge_lengths[t][k] = len;
      g.triangle_edge_normals[t][k] = Vec2(d.y(), -d.x()) / len;
      perimeter += len;
    }
    g.inradius[t] = 2.0 * mesh.triangle_area(t) / perimeter;
    g.h_min = std::min(g.h_min, g.inradius[t]);
  }

  g.quad_halves.resize(dual.num_quads());
  for (int q = 0; q < dual.num_quads(); ++q)
    for (int h = 0; h < dual.quads[q].num_halves(); ++h) {
      const auto& c = dual.quads[q].half[h].corners;
      g.quad_halves[q][h] = AffineMap::from_vertices(c[0], c[1], c[2]);
    }

  const int ns = dual.num_segments();
  g.segment_normals.resize(ns);
  g.segment_lengths.resize(ns);
  g.segment_h.resize(ns);
  for (int s = 0; s < ns; ++s) {
    const auto& seg = dual.segments[s];
    const auto& c0 = dual.quads[seg.side[0].quad].half[seg.side[0].half].corners;
    // side 0 uses local edge 0: barycenter -> vertex, counterclockwise in its half
    const Vec2 d = c0[1] - c0[0];
    g.segment_lengths[s] = d.norm();
    g.segment_normals[s] = Vec2(d.y(), -d.x()) / d.norm();
    double h = std::numeric_limits<double>::infinity();
    for (const auto& side : seg.side)
      h = std::min(h, 2.0 * dual.half_area(side.quad, side.half) / g.segment_lengths[s]);
    g.segment_h[s] = h;
  }
  return g;
}

}  // namespace stdg
