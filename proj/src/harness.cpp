#include "stdg/harness.hpp"

#include "stdg/quadrature.hpp"

#include <json.hpp>

#include <sys/resource.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <numbers>
#include <sstream>

namespace stdg {

FlowSample taylor_green_exact(const Vec2& x, double t, double nu) {
  const double ev = std::exp(-2.0 * nu * t);
  const double ep = std::exp(-4.0 * nu * t);
  return {std::sin(x.x()) * std::cos(x.y()) * ev, -std::cos(x.x()) * std::sin(x.y()) * ev,
          0.25 * (std::cos(2.0 * x.x()) + std::cos(2.0 * x.y())) * ep};
}

FlowField taylor_green_field(double nu) {
  return [nu](const Vec2& x, double t) { return taylor_green_exact(x, t, nu); };
}

// ---------------------------------------------------------------------------
// configuration

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

int to_int(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  int out = 0;
  try {
    out = std::stoi(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != value.size()) throw ConfigError(key + ": expected an integer, got '" + value + "'");
  return out;
}

double to_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != value.size() || !std::isfinite(out))
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + value + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"p", [](RunConfig& c, const std::string& k, const std::string& v) { c.p = to_int(k, v); }},
      {"p_gamma", [](RunConfig& c, const std::string& k, const std::string& v) { c.p_gamma = to_int(k, v); }},
      {"nu", [](RunConfig& c, const std::string& k, const std::string& v) { c.nu = to_double(k, v); }},
      {"cfl", [](RunConfig& c, const std::string& k, const std::string& v) { c.cfl = to_double(k, v); }},
      {"n_pic", [](RunConfig& c, const std::string& k, const std::string& v) { c.n_pic = to_int(k, v); }},
      {"t_end", [](RunConfig& c, const std::string& k, const std::string& v) { c.t_end = to_double(k, v); }},
      {"mesh", [](RunConfig& c, const std::string&, const std::string& v) { c.mesh_file = v; }},
      {"gen", [](RunConfig& c, const std::string& k, const std::string& v) { c.gen = to_int(k, v); }},
      {"periodic", [](RunConfig& c, const std::string& k, const std::string& v) { c.periodic = to_bool(k, v); }},
      {"out", [](RunConfig& c, const std::string&, const std::string& v) { c.out_dir = v; }},
      {"tol_momentum",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.tol_momentum = to_double(k, v); }},
      {"tol_pressure",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.tol_pressure = to_double(k, v); }},
      {"max_iterations",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.max_iterations = to_int(k, v); }},
      {"penalty", [](RunConfig& c, const std::string& k, const std::string& v) { c.penalty = to_double(k, v); }},
      {"vtk", [](RunConfig& c, const std::string& k, const std::string& v) { c.vtk = to_bool(k, v); }},
  };
  return table;
}

void apply(RunConfig& c, const std::string& key, const std::string& value, const char* source) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown configuration key '" + key + "'");
  it->second(c, key, value);
  c.provenance[key] = source;
}

void validate(RunConfig& c) {
  if (c.p < 1 || c.p > kMaxSpatialDegree)
    throw ConfigError("p = " + std::to_string(c.p) + " is outside 1.." + std::to_string(kMaxSpatialDegree) +
                      " (degree cap)");
  if (c.p_gamma < 0 || c.p_gamma > kMaxTemporalDegree)
    throw ConfigError("p_gamma = " + std::to_string(c.p_gamma) + " is outside 0.." +
                      std::to_string(kMaxTemporalDegree) + " (degree cap)");
  if (c.nu < 0.0) throw ConfigError("nu must be >= 0, got " + fmt(c.nu));
  if (!(c.cfl > 0.0)) throw ConfigError("cfl must be > 0, got " + fmt(c.cfl));
  if (!(c.t_end > 0.0)) throw ConfigError("t_end must be > 0, got " + fmt(c.t_end));
  if (c.provenance.at("n_pic") == "default") c.n_pic = c.p_gamma + 1;
  if (c.n_pic < 1) throw ConfigError("n_pic must be >= 1, got " + std::to_string(c.n_pic));
  if (c.gen < 1) throw ConfigError("gen must be >= 1, got " + std::to_string(c.gen));
  if (!c.periodic) throw ConfigError("periodic = false: only periodic domains are supported by the solver");
  if (!(c.tol_momentum > 0.0)) throw ConfigError("tol_momentum must be > 0");
  if (!(c.tol_pressure > 0.0)) throw ConfigError("tol_pressure must be > 0");
  if (c.max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
  if (!(c.penalty > 0.0)) throw ConfigError("penalty must be > 0");
}

}  // namespace

std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  return {{"p", std::to_string(p)},
          {"p_gamma", std::to_string(p_gamma)},
          {"nu", fmt(nu)},
          {"cfl", fmt(cfl)},
          {"n_pic", std::to_string(n_pic)},
          {"t_end", fmt(t_end)},
          {"mesh", mesh_file},
          {"gen", std::to_string(gen)},
          {"periodic", periodic ? "true" : "false"},
          {"out", out_dir},
          {"tol_momentum", fmt(tol_momentum)},
          {"tol_pressure", fmt(tol_pressure)},
          {"max_iterations", std::to_string(max_iterations)},
          {"penalty", fmt(penalty)},
          {"vtk", vtk ? "true" : "false"}};
}

RunConfig parse_config(std::string_view text, const ConfigOverrides& overrides) {
  RunConfig c;
  for (const auto& [key, value] : setters()) c.provenance[key] = "default";

  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    apply(c, trim(body.substr(0, eq)), trim(body.substr(eq + 1)), "file");
  }
  for (const auto& [key, value] : overrides) apply(c, key, value, "cli");
  validate(c);
  return c;
}

RunConfig parse_config_file(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

// ---------------------------------------------------------------------------
// errors

L2Errors compute_l2_errors(const Solver& solver, const SpaceTimeState& state, const FlowField& exact,
                           int extra_degree) {
  const int p = solver.order().p;
  const auto rule = triangle_rule(2 * p + 2 + extra_degree);
  const ElementGeometry& g = solver.geometry();
  const double t = state.t1;

  double ev = 0.0;
  for (int q = 0; q < solver.dual().num_quads(); ++q)
    for (int h = 0; h < 2; ++h) {
      const AffineMap& map = g.quad_halves[q][h];
      for (const auto& qp : rule) {
        const FlowSample f = exact(map.map(qp.x), t);
        const Vec2 vh = solver.velocity_at(state, q, h, qp.x);
        ev += qp.w * map.det * ((vh.x() - f.u) * (vh.x() - f.u) + (vh.y() - f.v) * (vh.y() - f.v));
      }
    }

  // two passes: mean offset, then the gauge-fixed error
  const int nt = solver.mesh().num_triangles();
  std::vector<double> diff;
  diff.reserve(static_cast<std::size_t>(nt) * rule.size());
  double mean = 0.0, area = 0.0;
  for (int tr = 0; tr < nt; ++tr) {
    const AffineMap& map = g.triangles[tr];
    for (const auto& qp : rule) {
      const double d = solver.pressure_at(state, tr, qp.x) - exact(map.map(qp.x), t).p;
      diff.push_back(d);
      mean += qp.w * map.det * d;
      area += qp.w * map.det;
    }
  }
  mean /= area;
  double ep = 0.0;
  std::size_t i = 0;
  for (int tr = 0; tr < nt; ++tr)
    for (const auto& qp : rule) {
      const double d = diff[i++] - mean;
      ep += qp.w * g.triangles[tr].det * d * d;
    }
  return {std::sqrt(ep), std::sqrt(ev)};
}

double convergence_order(double e1, double e2, double h1, double h2) {
  return std::log(e1 / e2) / std::log(h1 / h2);
}

// ---------------------------------------------------------------------------
// runs

double peak_memory_mb() {
  rusage ru{};
  if (getrusage(RUSAGE_SELF, &ru) != 0) return 0.0;
  return static_cast<double>(ru.ru_maxrss) / 1024.0;  // kilobytes on Linux
}

PrimaryMesh build_run_mesh(const RunConfig& config) {
  if (!config.mesh_file.empty()) return load_mesh(config.mesh_file);
  constexpr double pi = std::numbers::pi;
  return generate_structured_mesh(config.gen, Rect{-pi, pi, -pi, pi});
}

RunResult run_taylor_green(const RunConfig& config, const PrimaryMesh& mesh) {
  const auto start = std::chrono::steady_clock::now();
  RunResult r;
  r.config = config;
  r.mesh_checksum = mesh_checksum(mesh);
  r.elements = mesh.num_triangles();

  SolverTolerances tol;
  tol.momentum = config.tol_momentum;
  tol.pressure = config.tol_pressure;
  tol.max_iterations = config.max_iterations;
  tol.penalty = config.penalty;
  PicardConfig picard;
  picard.iterations = config.n_pic > 0 ? config.n_pic : config.p_gamma + 1;
  const Solver solver(mesh, config.order(), FluidParams{config.nu, {}}, picard, tol);
  r.h_min = solver.geometry().h_min;

  const FlowField exact = taylor_green_field(config.nu);
  SpaceTimeState state = solver.project_initial_condition(exact, 0.0);
  r.initial_energy = solver.kinetic_energy(state);

  TimeStepControl control;
  control.cfl = config.cfl;
  control.t_end = config.t_end;
  control.dt_max = config.t_end / 10.0;
  while (state.t1 < config.t_end) {
    const double dt = solver.compute_timestep(state, control);
    StepReport rep;
    state = solver.advance_time_step(state, dt, &rep);
    if (state.t1 > config.t_end * (1.0 - 1e-14)) state.t1 = config.t_end;
    SlabRecord s;
    s.t = state.t1;
    s.dt = dt;
    s.kinetic_energy = solver.kinetic_energy(state);
    s.divergence = rep.divergence_norms.back();
    s.picard_changes = rep.picard_changes;
    s.momentum_iterations = rep.momentum_iterations;
    s.pressure_iterations = rep.pressure_iterations;
    r.slabs.push_back(std::move(s));
  }
  r.errors = compute_l2_errors(solver, state, exact);
  r.cpu_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.mem_mb = peak_memory_mb();
  r.final_state = std::move(state);
  return r;
}

std::vector<ErrorReport> run_convergence_study(const std::vector<int>& levels, const RunConfig& config,
                                               std::vector<RunResult>* runs) {
  if (levels.size() < 2) throw std::invalid_argument("convergence study needs at least two levels");
  std::vector<ErrorReport> out;
  for (int level : levels) {
    RunConfig c = config;
    c.gen = level;
    c.mesh_file.clear();
    ErrorReport e;
    try {
      const PrimaryMesh mesh = build_run_mesh(c);
      e.elements = mesh.num_triangles();
      RunResult r = run_taylor_green(c, mesh);
      e.h_min = r.h_min;
      e.E2_p = r.errors.pressure;
      e.E2_v = r.errors.velocity;
      e.cpu_s = r.cpu_s;
      e.mem_mb = r.mem_mb;
      if (!out.empty()) e.sigma_v = convergence_order(out.back().E2_v, e.E2_v, out.back().h_min, e.h_min);
      if (runs) runs->push_back(std::move(r));
    } catch (const std::exception& ex) {
      e.failed = true;
      e.error = ex.what();
    }
    out.push_back(e);
    if (e.failed) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// output

void write_errors_csv(const std::vector<ErrorReport>& reports, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "elements,E2_p,E2_v,sigma_v,cpu_s,mem_mb\n";
  out << std::setprecision(6) << std::scientific;
  for (const auto& e : reports) {
    if (e.failed) {
      out << e.elements << ",failed,failed,,,\n";
      continue;
    }
    out << e.elements << ',' << e.E2_p << ',' << e.E2_v << ',';
    if (e.sigma_v) out << std::fixed << std::setprecision(3) << *e.sigma_v << std::scientific << std::setprecision(6);
    out << ',' << std::fixed << std::setprecision(3) << e.cpu_s << ',' << std::setprecision(1) << e.mem_mb
        << std::scientific << std::setprecision(6) << '\n';
  }
}

void write_vtk(const Solver& solver, const SpaceTimeState& state, const std::filesystem::path& path) {
  const PrimaryMesh& mesh = solver.mesh();
  const DualMesh& dual = solver.dual();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(12);

  std::vector<Vec2> vel(mesh.num_vertices(), Vec2::Zero());
  std::vector<int> count(mesh.num_vertices(), 0);
  const std::array<Vec2, 2> corner{Vec2(1.0, 0.0), Vec2(0.0, 1.0)};
  for (int q = 0; q < dual.num_quads(); ++q)
    for (int h = 0; h < dual.quads[q].num_halves(); ++h) {
      const DualHalf& half = dual.quads[q].half[h];
      const auto& tri = mesh.triangles[half.triangle];
      for (int c = 0; c < 2; ++c) {
        const int v = tri[(half.local_edge + c) % 3];
        vel[v] += solver.velocity_at(state, q, h, corner[c]);
        ++count[v];
      }
    }

  out << "# vtk DataFile Version 3.0\n";
  out << "staggered space-time DG state t=" << state.t1 << "\n";
  out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.num_vertices() << " double\n";
  for (const Vec2& v : mesh.vertices) out << v.x() << ' ' << v.y() << " 0\n";
  out << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << mesh.num_triangles() << '\n';
  for (int t = 0; t < mesh.num_triangles(); ++t) out << "5\n";

  out << "CELL_DATA " << mesh.num_triangles() << '\n';
  out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  const Eigen::VectorXd p_end = state.pressure_end();
  const int nphi = solver.order().n_phi();
  for (int t = 0; t < mesh.num_triangles(); ++t) out << p_end.segment(t * nphi, nphi).mean() << '\n';

  out << "POINT_DATA " << mesh.num_vertices() << '\n';
  out << "VECTORS velocity double\n";
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const Vec2 a = count[v] > 0 ? Vec2(vel[v] / count[v]) : Vec2::Zero();
    out << a.x() << ' ' << a.y() << " 0\n";
  }
}

void write_run_report(const RunResult& run, const std::filesystem::path& path,
                      const std::vector<ErrorReport>& study) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json cfg;
  for (const auto& [k, v] : run.config.entries()) cfg[k] = {{"value", v}, {"source", run.config.provenance.count(k) ? run.config.provenance.at(k) : "default"}};
  j["config"] = cfg;
  std::ostringstream cs;
  cs << std::hex << std::setw(16) << std::setfill('0') << run.mesh_checksum;
  j["mesh"] = {{"triangles", run.elements}, {"checksum", cs.str()}, {"h_min", run.h_min}};
  j["results"] = {{"t_end", run.final_state ? run.final_state->t1 : 0.0},
                  {"slabs", run.slabs.size()},
                  {"E2_p", run.errors.pressure},
                  {"E2_v", run.errors.velocity},
                  {"initial_kinetic_energy", run.initial_energy},
                  {"final_kinetic_energy", run.slabs.empty() ? run.initial_energy : run.slabs.back().kinetic_energy},
                  {"cpu_s", run.cpu_s},
                  {"mem_mb", run.mem_mb}};
  double max_div = 0.0;
  for (const auto& s : run.slabs) max_div = std::max(max_div, s.divergence);
  j["results"]["max_divergence"] = max_div;
  if (!study.empty()) {
    nlohmann::ordered_json levels = nlohmann::ordered_json::array();
    for (const auto& e : study) {
      nlohmann::ordered_json l = {{"elements", e.elements}, {"h_min", e.h_min}, {"E2_p", e.E2_p},
                                  {"E2_v", e.E2_v},         {"cpu_s", e.cpu_s}, {"mem_mb", e.mem_mb}};
      l["sigma_v"] = e.sigma_v ? nlohmann::ordered_json(*e.sigma_v) : nlohmann::ordered_json(nullptr);
      if (e.failed) l["error"] = e.error;
      levels.push_back(l);
    }
    j["study"] = levels;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace stdg
