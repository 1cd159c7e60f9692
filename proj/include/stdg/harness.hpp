#pragma once

#include "stdg/solver.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stdg {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Taylor-Green vortex on [-pi, pi]^2.
FlowSample taylor_green_exact(const Vec2& x, double t, double nu);
FlowField taylor_green_field(double nu);

/// Fully resolved run parameters. `provenance` records where every key came
/// from: "default", "file" or "cli".
struct RunConfig {
  int p = 2;
  int p_gamma = 2;
  double nu = 0.1;
  double cfl = 0.4;
  int n_pic = 0;  // 0 until resolved; resolved value is p_gamma + 1 unless set
  double t_end = 0.1;
  std::string mesh_file;  // empty: structured generator
  int gen = 6;
  bool periodic = true;
  std::string out_dir = "out";
  double tol_momentum = 1e-12;
  double tol_pressure = 1e-10;
  int max_iterations = 5000;
  double penalty = kDefaultPenalty;
  bool vtk = true;

  std::map<std::string, std::string> provenance;

  DiscretizationOrder order() const { return {p, p_gamma}; }
  /// `key = value` lines for every key, in a fixed order.
  std::vector<std::pair<std::string, std::string>> entries() const;
};

using ConfigOverrides = std::vector<std::pair<std::string, std::string>>;

/// Parses `key = value` text (`#` starts a comment), then applies overrides.
/// Unknown keys, malformed values and out-of-range values throw ConfigError.
RunConfig parse_config(std::string_view text, const ConfigOverrides& overrides = {});
RunConfig parse_config_file(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

struct L2Errors {
  double pressure = 0.0;
  double velocity = 0.0;
};

/// L2 errors at the end of the state's slab. Each half-quad and triangle is
/// integrated with a rule of degree 2p + 2 + extra_degree. The pressure is
/// compared after removing the mean of (p_h - p_exact).
L2Errors compute_l2_errors(const Solver& solver, const SpaceTimeState& state, const FlowField& exact,
                           int extra_degree = 0);

struct ErrorReport {
  int elements = 0;
  double h_min = 0.0;
  double E2_p = 0.0;
  double E2_v = 0.0;
  std::optional<double> sigma_v;  // empty on the first level
  double cpu_s = 0.0;
  double mem_mb = 0.0;
  bool failed = false;
  std::string error;
};

/// log(E1 / E2) / log(h1 / h2).
double convergence_order(double e1, double e2, double h1, double h2);

/// Per-slab record of one simulation.
struct SlabRecord {
  double t = 0.0;
  double dt = 0.0;
  double kinetic_energy = 0.0;
  double divergence = 0.0;  // max |D v| after the last Picard iteration
  std::vector<double> picard_changes;
  int momentum_iterations = 0;
  int pressure_iterations = 0;
};

struct RunResult {
  RunConfig config;
  std::uint64_t mesh_checksum = 0;
  int elements = 0;
  double h_min = 0.0;
  double initial_energy = 0.0;
  std::vector<SlabRecord> slabs;
  L2Errors errors;
  double cpu_s = 0.0;
  double mem_mb = 0.0;
  std::optional<SpaceTimeState> final_state;
};

PrimaryMesh build_run_mesh(const RunConfig& config);

/// Taylor-Green run from t = 0 to config.t_end. Writes nothing.
RunResult run_taylor_green(const RunConfig& config, const PrimaryMesh& mesh);

/// Runs one simulation per generator level. A failed level is recorded with
/// `failed` set and stops the study.
std::vector<ErrorReport> run_convergence_study(const std::vector<int>& levels, const RunConfig& config,
                                               std::vector<RunResult>* runs = nullptr);

/// Header `elements,E2_p,E2_v,sigma_v,cpu_s,mem_mb`.
void write_errors_csv(const std::vector<ErrorReport>& reports, const std::filesystem::path& path);

/// Legacy ASCII unstructured grid: pressure per cell (mean of the triangle's
/// nodal values) and velocity per point (average over incident dual halves).
void write_vtk(const Solver& solver, const SpaceTimeState& state, const std::filesystem::path& path);

/// Reproduction block: config echo with provenance, mesh checksum and
/// results. JSON, described in the README.
void write_run_report(const RunResult& run, const std::filesystem::path& path,
                      const std::vector<ErrorReport>& study = {});

/// Peak resident set size of this process in MB (0 when unavailable).
double peak_memory_mb();

}  // namespace stdg
