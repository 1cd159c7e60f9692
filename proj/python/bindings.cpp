#include "stdg/harness.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace stdg;

namespace {

py::dict error_report_dict(const ErrorReport& e) {
  py::dict d;
  d["elements"] = e.elements;
  d["h_min"] = e.h_min;
  d["E2_p"] = e.E2_p;
  d["E2_v"] = e.E2_v;
  d["sigma_v"] = e.sigma_v ? py::cast(*e.sigma_v) : py::none();
  d["cpu_s"] = e.cpu_s;
  d["mem_mb"] = e.mem_mb;
  d["failed"] = e.failed;
  d["error"] = e.error;
  return d;
}

py::dict run_result_dict(const RunResult& r) {
  py::dict d;
  d["elements"] = r.elements;
  d["h_min"] = r.h_min;
  d["E2_p"] = r.errors.pressure;
  d["E2_v"] = r.errors.velocity;
  d["initial_energy"] = r.initial_energy;
  py::list slabs;
  for (const SlabRecord& s : r.slabs) {
    py::dict sd;
    sd["t"] = s.t;
    sd["dt"] = s.dt;
    sd["kinetic_energy"] = s.kinetic_energy;
    sd["divergence"] = s.divergence;
    sd["picard_changes"] = s.picard_changes;
    slabs.append(sd);
  }
  d["slabs"] = slabs;
  d["cpu_s"] = r.cpu_s;
  d["mesh_checksum"] = r.mesh_checksum;
  return d;
}

Eigen::MatrixXd vertex_array(const PrimaryMesh& m) {
  Eigen::MatrixXd v(m.num_vertices(), 2);
  for (int i = 0; i < m.num_vertices(); ++i) v.row(i) = m.vertices[i].transpose();
  return v;
}

Eigen::MatrixXi triangle_array(const PrimaryMesh& m) {
  Eigen::MatrixXi t(m.num_triangles(), 3);
  for (int i = 0; i < m.num_triangles(); ++i)
    for (int k = 0; k < 3; ++k) t(i, k) = m.triangles[i][k];
  return t;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Staggered semi-implicit space-time DG solver for 2D incompressible Navier-Stokes";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<MeshError>(m, "MeshError", PyExc_ValueError);

  m.attr("max_spatial_degree") = kMaxSpatialDegree;
  m.attr("max_temporal_degree") = kMaxTemporalDegree;

  py::class_<PrimaryMesh>(m, "Mesh")
      .def_property_readonly("num_vertices", &PrimaryMesh::num_vertices)
      .def_property_readonly("num_triangles", &PrimaryMesh::num_triangles)
      .def_property_readonly("num_edges", &PrimaryMesh::num_edges)
      .def_property_readonly("num_periodic_pairs", &PrimaryMesh::num_periodic_pairs)
      .def_property_readonly("vertices", &vertex_array)
      .def_property_readonly("triangles", &triangle_array)
      .def_property_readonly("checksum", [](const PrimaryMesh& mesh) { return mesh_checksum(mesh); });

  m.def(
      "generate_structured_mesh",
      [](int n, double x0, double x1, double y0, double y1) { return generate_structured_mesh(n, Rect{x0, x1, y0, y1}); },
      py::arg("n"), py::arg("x0") = 0.0, py::arg("x1") = 1.0, py::arg("y0") = 0.0, py::arg("y1") = 1.0);
  m.def("load_mesh", &load_mesh, py::arg("path"));
  m.def("write_mesh", &write_mesh, py::arg("mesh"), py::arg("path"));

  m.def(
      "triangle_basis",
      [](int p, double xi, double eta) {
        const BasisValues b = TriangleBasis(p).eval({xi, eta});
        return py::make_tuple(Eigen::VectorXd(b.values), Eigen::MatrixXd(b.gradients));
      },
      py::arg("p"), py::arg("xi"), py::arg("eta"));
  m.def(
      "reference_mass",
      [](int p, int p_gamma) {
        const ReferenceTensors t = precompute_reference_tensors({p, p_gamma});
        return py::make_tuple(t.mass, t.time_mass, t.time_stiffness);
      },
      py::arg("p"), py::arg("p_gamma") = 1);

  m.def(
      "taylor_green_exact",
      [](double x, double y, double t, double nu) {
        const FlowSample s = taylor_green_exact({x, y}, t, nu);
        return py::make_tuple(s.u, s.v, s.p);
      },
      py::arg("x"), py::arg("y"), py::arg("t"), py::arg("nu") = 0.1);
  m.def("convergence_order", &convergence_order, py::arg("e1"), py::arg("e2"), py::arg("h1"), py::arg("h2"));

  m.def(
      "parse_config",
      [](const std::string& text, const std::map<std::string, std::string>& overrides) {
        const RunConfig c = parse_config(text, ConfigOverrides(overrides.begin(), overrides.end()));
        py::dict d;
        for (const auto& [k, v] : c.entries()) d[py::str(k)] = py::make_tuple(v, c.provenance.at(k));
        return d;
      },
      py::arg("text") = "", py::arg("overrides") = std::map<std::string, std::string>{},
      "Resolved configuration as {key: (value, source)}.");

  m.def(
      "run_taylor_green",
      [](const std::string& text, const std::map<std::string, std::string>& overrides) {
        const RunConfig c = parse_config(text, ConfigOverrides(overrides.begin(), overrides.end()));
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_taylor_green(c, build_run_mesh(c));
        }
        return run_result_dict(r);
      },
      py::arg("config") = "", py::arg("overrides") = std::map<std::string, std::string>{});

  m.def(
      "run_convergence_study",
      [](const std::vector<int>& levels, const std::string& text,
         const std::map<std::string, std::string>& overrides) {
        const RunConfig c = parse_config(text, ConfigOverrides(overrides.begin(), overrides.end()));
        std::vector<ErrorReport> reports;
        {
          py::gil_scoped_release release;
          reports = run_convergence_study(levels, c);
        }
        py::list out;
        for (const auto& e : reports) out.append(error_report_dict(e));
        return out;
      },
      py::arg("levels"), py::arg("config") = "", py::arg("overrides") = std::map<std::string, std::string>{});
}
