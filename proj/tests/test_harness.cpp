#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "stdg/harness.hpp"
#include "basis_checks.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace stdg;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "stdg_harness_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string l; std::getline(in, l);) lines.push_back(l);
  return lines;
}

/// Minimal legacy-VTK reader, written against the file format, not the writer.
struct VtkData {
  std::vector<Vec2> points;
  std::vector<std::array<int, 3>> cells;
  std::vector<int> cell_types;
  std::vector<double> pressure;
  std::vector<Vec2> velocity;
  bool ascii = false;
};

VtkData read_vtk(const fs::path& path) {
  std::ifstream in(path);
  VtkData d;
  std::string line;
  std::getline(in, line);
  REQUIRE(line.rfind("# vtk DataFile", 0) == 0);
  std::getline(in, line);  // title
  std::string word;
  while (in >> word) {
    if (word == "ASCII") {
      d.ascii = true;
    } else if (word == "POINTS") {
      int n;
      std::string type;
      in >> n >> type;
      d.points.resize(n);
      double z;
      for (auto& p : d.points) in >> p.x() >> p.y() >> z;
    } else if (word == "CELLS") {
      int n, total;
      in >> n >> total;
      d.cells.resize(n);
      for (auto& c : d.cells) {
        int k;
        in >> k;
        REQUIRE(k == 3);
        in >> c[0] >> c[1] >> c[2];
      }
    } else if (word == "CELL_TYPES") {
      int n;
      in >> n;
      d.cell_types.resize(n);
      for (int& t : d.cell_types) in >> t;
    } else if (word == "SCALARS") {
      std::string name, type, lut, table;
      int comps;
      in >> name >> type >> comps >> lut >> table;
      REQUIRE(name == "pressure");
      d.pressure.resize(d.cells.size());
      for (double& p : d.pressure) in >> p;
    } else if (word == "VECTORS") {
      std::string name, type;
      in >> name >> type;
      REQUIRE(name == "velocity");
      d.velocity.resize(d.points.size());
      double z;
      for (auto& v : d.velocity) in >> v.x() >> v.y() >> z;
    }
  }
  return d;
}

RunConfig small_config(int gen, int p, double t_end) {
  return parse_config("gen = " + std::to_string(gen) + "\np = " + std::to_string(p) +
                      "\np_gamma = " + std::to_string(p) + "\nt_end = " + std::to_string(t_end) + "\n");
}

}  // namespace

TEST_CASE("Taylor-Green exact solution") {
  const FlowSample a = taylor_green_exact({kPi / 2, 0.0}, 0.0, 0.1);
  CHECK(a.u == doctest::Approx(1.0));
  CHECK(std::abs(a.v) < 1e-16);
  CHECK(std::abs(a.p) < 1e-16);

  const Vec2 x(0.3, -1.1);
  const FlowSample b0 = taylor_green_exact(x, 0.0, 0.1);
  const FlowSample b1 = taylor_green_exact(x, 0.5, 0.1);
  CHECK(b1.u == doctest::Approx(b0.u * std::exp(-0.1)));
  CHECK(b1.v == doctest::Approx(b0.v * std::exp(-0.1)));
  CHECK(b1.p == doctest::Approx(b0.p * std::exp(-0.2)));

  // divergence by central differences of the closed form derivatives
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double px = u(rng), py = u(rng), t = 0.07;
    const double e = std::exp(-0.2 * t);
    const double ux = std::cos(px) * std::cos(py) * e;   // d/dx sin x cos y
    const double vy = -std::cos(px) * std::cos(py) * e;  // d/dy -cos x sin y
    worst = std::max(worst, std::abs(ux + vy));
    const FlowSample s = taylor_green_exact({px, py}, t, 0.1);
    CHECK(s.u == doctest::Approx(std::sin(px) * std::cos(py) * e));
  }
  CHECK(worst < 1e-13);
}

TEST_CASE("configuration parsing") {
  SUBCASE("defaults") {
    const RunConfig c = parse_config("");
    CHECK(c.p == 2);
    CHECK(c.p_gamma == 2);
    CHECK(c.nu == 0.1);
    CHECK(c.cfl == 0.4);
    CHECK(c.t_end == 0.1);
    CHECK(c.n_pic == 3);
    CHECK(c.gen == 6);
    CHECK(c.mesh_file.empty());
    for (const auto& [k, v] : c.entries()) CHECK(c.provenance.at(k) == "default");
  }
  SUBCASE("comments, file values and n_pic follow p_gamma") {
    const RunConfig c = parse_config("# header\np_gamma = 1   # inline\n\nnu=0.05\n");
    CHECK(c.p_gamma == 1);
    CHECK(c.n_pic == 2);
    CHECK(c.nu == 0.05);
    CHECK(c.provenance.at("nu") == "file");
    CHECK(parse_config("n_pic = 5").n_pic == 5);
  }
  SUBCASE("command line wins over the file") {
    const RunConfig c = parse_config("p = 1\ncfl = 0.2\n", {{"p", "3"}});
    CHECK(c.p == 3);
    CHECK(c.provenance.at("p") == "cli");
    CHECK(c.provenance.at("cfl") == "file");
  }
  SUBCASE("errors") {
    try {
      parse_config("p = 7");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("degree cap") != std::string::npos);
    }
    try {
      parse_config("nu = -1");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("nu") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config("viscosity = 0.1"), ConfigError);
    CHECK_THROWS_AS(parse_config("p 2"), ConfigError);
    CHECK_THROWS_AS(parse_config("p = two"), ConfigError);
    CHECK_THROWS_AS(parse_config("cfl = 0"), ConfigError);
    CHECK_THROWS_AS(parse_config("periodic = false"), ConfigError);
    CHECK_THROWS_AS(parse_config("", {{"bogus", "1"}}), ConfigError);
    CHECK_THROWS_AS(parse_config_file(scratch("missing.cfg")), ConfigError);
  }
  SUBCASE("file round trip through entries") {
    const RunConfig a = parse_config("p = 3\nnu = 0.025\nt_end = 0.05\n");
    std::ostringstream os;
    for (const auto& [k, v] : a.entries())
      if (!v.empty()) os << k << " = " << v << '\n';
    const fs::path path = scratch("echo.cfg");
    std::ofstream(path) << os.str();
    const RunConfig b = parse_config_file(path);
    CHECK(b.entries() == a.entries());
  }
}

TEST_CASE("convergence order formula") {
  CHECK(convergence_order(8.0, 1.0, 2.0, 1.0) == doctest::Approx(3.0));
  CHECK(convergence_order(1e-2, 2.5e-3, 0.1, 0.05) == doctest::Approx(2.0));
  // an error pair dropping by 1.69e-2 / 2.52e-3 is third order for an h ratio of that factor^(1/3)
  const double ratio = std::cbrt(1.69e-2 / 2.52e-3);
  CHECK(convergence_order(1.69e-2, 2.52e-3, ratio, 1.0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(convergence_order(1.69e-2, 2.52e-3, 1.9, 1.0) == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("L2 errors") {
  const Solver s(generate_structured_mesh(4, Rect{0, 1, 0, 1}), {2, 2}, FluidParams{});
  SUBCASE("fields inside the discrete spaces give zero error") {
    const FlowField f = [](const Vec2& x, double) { return FlowSample{1.0, -2.0, 3.0 + x.x() - 2.0 * x.y()}; };
    const SpaceTimeState st = s.project_initial_condition(f);
    const FlowField shifted = [](const Vec2& x, double) { return FlowSample{1.0, -2.0, -4.0 + x.x() - 2.0 * x.y()}; };
    const L2Errors e = compute_l2_errors(s, st, shifted);
    CHECK(e.velocity < 1e-13);
    CHECK(e.pressure < 1e-13);
  }
  SUBCASE("known error of a constant offset in velocity") {
    const FlowField f = [](const Vec2&, double) { return FlowSample{1.0, 0.0, 0.0}; };
    const FlowField g = [](const Vec2&, double) { return FlowSample{1.5, 0.0, 0.0}; };
    CHECK(compute_l2_errors(s, s.project_initial_condition(f), g).velocity == doctest::Approx(0.5));
  }
}

TEST_CASE("Taylor-Green projection and quadrature convergence") {
  RunConfig cfg = parse_config("gen = 21");
  const Solver s(build_run_mesh(cfg), cfg.order(), FluidParams{cfg.nu, {}});
  const SpaceTimeState st = s.project_initial_condition(taylor_green_field(cfg.nu));
  const L2Errors e = compute_l2_errors(s, st, taylor_green_field(cfg.nu));
  CHECK(e.velocity < 3.95e-2);
  CHECK(e.pressure < 3.95e-2);

  cfg.gen = 6;
  const RunResult run = run_taylor_green(cfg, build_run_mesh(cfg));
  const Solver s6(build_run_mesh(cfg), cfg.order(), FluidParams{cfg.nu, {}});
  const L2Errors base = compute_l2_errors(s6, *run.final_state, taylor_green_field(cfg.nu));
  const L2Errors fine = compute_l2_errors(s6, *run.final_state, taylor_green_field(cfg.nu), 2);
  CHECK(base.velocity == doctest::Approx(run.errors.velocity).epsilon(1e-14));
  CHECK(std::abs(fine.velocity / base.velocity - 1.0) < 1e-3);
  CHECK(std::abs(fine.pressure / base.pressure - 1.0) < 1e-3);
}

TEST_CASE("convergence study bookkeeping") {
  RunConfig cfg = small_config(2, 1, 0.02);
  CHECK_THROWS_AS(run_convergence_study({4}, cfg), std::invalid_argument);

  std::vector<RunResult> runs;
  const auto reports = run_convergence_study({3, 4}, cfg, &runs);
  REQUIRE(reports.size() == 2);
  CHECK(runs.size() == 2);
  CHECK_FALSE(reports[0].sigma_v.has_value());
  REQUIRE(reports[1].sigma_v.has_value());
  CHECK(*reports[1].sigma_v == doctest::Approx(convergence_order(reports[0].E2_v, reports[1].E2_v,
                                                                  reports[0].h_min, reports[1].h_min)));
  CHECK(reports[1].elements == 32);

  // a failing level stops the study and is flagged
  RunConfig broken = cfg;
  broken.max_iterations = 1;
  broken.tol_pressure = 1e-15;
  const auto partial = run_convergence_study({3, 4, 5}, broken);
  REQUIRE(partial.size() == 1);
  CHECK(partial[0].failed);
  CHECK_FALSE(partial[0].error.empty());

  const fs::path csv = scratch("errors.csv");
  std::vector<ErrorReport> with_failure = reports;
  with_failure.push_back(partial[0]);
  write_errors_csv(with_failure, csv);
  const auto lines = read_lines(csv);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "elements,E2_p,E2_v,sigma_v,cpu_s,mem_mb");
  CHECK(lines[1].rfind("18,", 0) == 0);
  CHECK(lines[2].rfind("32,", 0) == 0);
  CHECK(lines[3].find("failed") != std::string::npos);
  // sigma column empty on the first level, numeric on the second
  CHECK(lines[1].find(",,") != std::string::npos);
  std::stringstream row(lines[2]);
  std::vector<std::string> cols;
  for (std::string c; std::getline(row, c, ',');) cols.push_back(c);
  REQUIRE(cols.size() == 6);
  CHECK(std::stod(cols[3]) == doctest::Approx(*reports[1].sigma_v).epsilon(1e-3));
  CHECK(std::stod(cols[2]) == doctest::Approx(reports[1].E2_v).epsilon(1e-5));
}

TEST_CASE("VTK output") {
  SUBCASE("two-triangle mesh, uniform flow") {
    const PrimaryMesh m = generate_structured_mesh(1, Rect{0, 1, 0, 1});
    const Solver s(m, {2, 1}, FluidParams{});
    const SpaceTimeState st =
        s.project_initial_condition([](const Vec2&, double) { return FlowSample{0.25, -1.5, 2.0}; });
    const fs::path path = scratch("two.vtk");
    write_vtk(s, st, path);
    const VtkData d = read_vtk(path);
    CHECK(d.ascii);
    CHECK(d.points.size() == 4);
    CHECK(d.cells.size() == 2);
    CHECK(d.cell_types == std::vector<int>{5, 5});
    REQUIRE(d.velocity.size() == 4);
    for (const Vec2& v : d.velocity) CHECK((v - Vec2(0.25, -1.5)).norm() < 1e-11);
    for (double p : d.pressure) CHECK(p == doctest::Approx(2.0));
    const std::string text = [&] {
      std::ifstream in(path);
      std::stringstream ss;
      ss << in.rdbuf();
      return ss.str();
    }();
    CHECK(text.find("POINT_DATA 4") != std::string::npos);
    CHECK(text.find("CELL_DATA 2") != std::string::npos);
  }
  SUBCASE("round trip against direct samples") {
    const Solver s(generate_structured_mesh(4, Rect{-kPi, kPi, -kPi, kPi}), {2, 2}, FluidParams{});
    const SpaceTimeState st = s.project_initial_condition(taylor_green_field(0.1));
    const fs::path path = scratch("tg.vtk");
    write_vtk(s, st, path);
    const VtkData d = read_vtk(path);
    REQUIRE(d.points.size() == static_cast<std::size_t>(s.mesh().num_vertices()));
    for (int i = 0; i < s.mesh().num_vertices(); ++i) CHECK((d.points[i] - s.mesh().vertices[i]).norm() < 1e-11);
    // cell pressure: mean of the nodal values, sampled here through pressure_at
    const TriangleBasis tb(2);
    for (int t = 0; t < s.mesh().num_triangles(); ++t) {
      double mean = 0.0;
      for (const Vec2& node : tb.nodes()) mean += s.pressure_at(st, t, node);
      CHECK(d.pressure[t] == doctest::Approx(mean / tb.size()).epsilon(1e-10));
    }
    // vertex velocity: average over every dual half touching the vertex
    std::vector<Vec2> sum(s.mesh().num_vertices(), Vec2::Zero());
    std::vector<int> n(s.mesh().num_vertices(), 0);
    for (int q = 0; q < s.dual().num_quads(); ++q)
      for (int h = 0; h < 2; ++h) {
        const AffineMap& map = s.geometry().quad_halves[q][h];
        for (const Vec2 corner : {Vec2(1, 0), Vec2(0, 1)}) {
          const Vec2 x = map.map(corner);
          for (int v = 0; v < s.mesh().num_vertices(); ++v)
            if ((s.mesh().vertices[v] - x).norm() < 1e-9) {
              sum[v] += s.velocity_at(st, q, h, corner);
              ++n[v];
            }
        }
      }
    for (int v = 0; v < s.mesh().num_vertices(); ++v) {
      REQUIRE(n[v] > 0);
      CHECK((d.velocity[v] - sum[v] / n[v]).norm() < 1e-10);
    }
  }
}

TEST_CASE("run report") {
  RunConfig cfg = parse_config("gen = 3\np = 1\np_gamma = 1\nt_end = 0.02\n", {{"cfl", "0.3"}});
  const PrimaryMesh mesh = build_run_mesh(cfg);
  const RunResult run = run_taylor_green(cfg, mesh);
  CHECK(run.final_state->t1 == cfg.t_end);
  CHECK(run.elements == 18);
  CHECK(run.mesh_checksum == mesh_checksum(mesh));

  const fs::path path = scratch("run.json");
  ErrorReport level;
  level.elements = 18;
  level.E2_v = run.errors.velocity;
  write_run_report(run, path, {level});
  std::ifstream in(path);
  const auto j = nlohmann::json::parse(in);
  CHECK(j["config"]["cfl"]["value"] == "0.29999999999999999");
  CHECK(j["config"]["cfl"]["source"] == "cli");
  CHECK(j["config"]["p"]["source"] == "file");
  CHECK(j["config"]["nu"]["source"] == "default");
  CHECK(j["config"]["n_pic"]["value"] == "2");
  CHECK(j["config"].size() == cfg.entries().size());
  CHECK(j["mesh"]["triangles"] == 18);
  const std::string sum = j["mesh"]["checksum"];
  CHECK(sum.size() == 16);
  CHECK(std::stoull(sum, nullptr, 16) == run.mesh_checksum);
  CHECK(j["results"]["E2_v"].get<double>() == run.errors.velocity);
  CHECK(j["results"]["slabs"] == run.slabs.size());
  CHECK(j["results"]["max_divergence"].get<double>() <= 1e-7);
  CHECK(j["study"].size() == 1);
  CHECK(j["study"][0]["sigma_v"].is_null());
}
