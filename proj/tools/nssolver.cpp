// nssolver: Taylor-Green runs and convergence studies.

#include "stdg/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

void print_slabs(const stdg::RunResult& r) {
  for (std::size_t i = 0; i < r.slabs.size(); ++i) {
    const auto& s = r.slabs[i];
    std::printf("slab %3zu  t=%.6f  dt=%.3e  KE=%.10e  |Dv|=%.2e  picard:", i + 1, s.t, s.dt, s.kinetic_energy,
                s.divergence);
    for (double c : s.picard_changes) std::printf(" %.2e", c);
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Staggered space-time DG solver for 2D incompressible Navier-Stokes"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "Taylor-Green vortex on one mesh");
  std::string config_path;
  std::string mesh_path;
  std::string out_dir;
  int p = 0, pgamma = 0, gen = 0;
  double nu = 0.0, cfl = 0.0, tend = 0.0;
  bool verbose = false;
  run->add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
  run->add_option("--p", p, "spatial degree");
  run->add_option("--pgamma", pgamma, "temporal degree");
  run->add_option("--nu", nu, "kinematic viscosity");
  run->add_option("--cfl", cfl, "CFL number");
  run->add_option("--tend", tend, "final time");
  auto* mesh_opt = run->add_option("--mesh", mesh_path, "mesh file");
  run->add_option("--gen", gen, "structured generator level n (2 n^2 triangles)")->excludes(mesh_opt);
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("-v,--verbose", verbose, "print per-slab diagnostics");

  // converge
  auto* conv = app.add_subcommand("converge", "convergence study over generator levels");
  std::string test_case = "taylor-green";
  std::string levels = "6,8,14,21";
  std::string conv_config;
  std::string conv_out;
  int cp = 0, cpg = 0;
  conv->add_option("--case", test_case, "test case")->check(CLI::IsMember({"taylor-green"}));
  conv->add_option("--levels", levels, "comma-separated generator levels");
  conv->add_option("--config", conv_config, "key = value configuration file")->check(CLI::ExistingFile);
  conv->add_option("--p", cp, "spatial degree");
  conv->add_option("--pgamma", cpg, "temporal degree");
  conv->add_option("--out", conv_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      stdg::ConfigOverrides ov;
      if (run->count("--p")) ov.emplace_back("p", std::to_string(p));
      if (run->count("--pgamma")) ov.emplace_back("p_gamma", std::to_string(pgamma));
      if (run->count("--nu")) ov.emplace_back("nu", run->get_option("--nu")->as<std::string>());
      if (run->count("--cfl")) ov.emplace_back("cfl", run->get_option("--cfl")->as<std::string>());
      if (run->count("--tend")) ov.emplace_back("t_end", run->get_option("--tend")->as<std::string>());
      if (run->count("--mesh")) ov.emplace_back("mesh", mesh_path);
      if (run->count("--gen")) {
        ov.emplace_back("gen", std::to_string(gen));
        ov.emplace_back("mesh", "");
      }
      if (run->count("--out")) ov.emplace_back("out", out_dir);
      const stdg::RunConfig cfg = config_path.empty() ? stdg::parse_config("", ov)
                                                      : stdg::parse_config_file(config_path, ov);
      fs::create_directories(cfg.out_dir);
      const stdg::PrimaryMesh mesh = stdg::build_run_mesh(cfg);
      const stdg::RunResult r = stdg::run_taylor_green(cfg, mesh);
      if (verbose) print_slabs(r);
      std::printf("triangles %d  slabs %zu  E2_p %.6e  E2_v %.6e  time %.2fs  mem %.1fMB\n", r.elements,
                  r.slabs.size(), r.errors.pressure, r.errors.velocity, r.cpu_s, r.mem_mb);
      if (cfg.vtk) {
        const stdg::Solver solver(mesh, cfg.order(), stdg::FluidParams{cfg.nu, {}});
        stdg::write_vtk(solver, *r.final_state, fs::path(cfg.out_dir) / "fields_final.vtk");
      }
      stdg::write_run_report(r, fs::path(cfg.out_dir) / "run.json");
      std::printf("wrote %s\n", (fs::path(cfg.out_dir) / "run.json").c_str());
      return 0;
    }

    stdg::ConfigOverrides ov;
    if (conv->count("--p")) ov.emplace_back("p", std::to_string(cp));
    if (conv->count("--pgamma")) ov.emplace_back("p_gamma", std::to_string(cpg));
    if (conv->count("--out")) ov.emplace_back("out", conv_out);
    const stdg::RunConfig cfg = conv_config.empty() ? stdg::parse_config("", ov)
                                                    : stdg::parse_config_file(conv_config, ov);
    fs::create_directories(cfg.out_dir);
    std::vector<stdg::RunResult> runs;
    const auto reports = stdg::run_convergence_study(parse_levels(levels), cfg, &runs);
    std::printf("%9s %12s %12s %8s %9s %8s\n", "elements", "E2_p", "E2_v", "sigma_v", "cpu_s", "mem_mb");
    for (const auto& e : reports) {
      if (e.failed) {
        std::printf("%9d  failed: %s\n", e.elements, e.error.c_str());
        continue;
      }
      std::printf("%9d %12.4e %12.4e %8s %9.2f %8.1f\n", e.elements, e.E2_p, e.E2_v,
                  e.sigma_v ? std::to_string(*e.sigma_v).substr(0, 5).c_str() : "-", e.cpu_s, e.mem_mb);
    }
    stdg::write_errors_csv(reports, fs::path(cfg.out_dir) / "errors.csv");
    if (!runs.empty()) stdg::write_run_report(runs.back(), fs::path(cfg.out_dir) / "run.json", reports);
    std::printf("wrote %s\n", (fs::path(cfg.out_dir) / "errors.csv").c_str());
    return reports.back().failed ? 1 : 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
