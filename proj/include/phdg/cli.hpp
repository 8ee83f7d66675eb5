#pragma once

// Experiment command line. Subcommands:
//
//   simulate        integrate one scheme, write states.csv + ports.csv
//   power-balance   per-interval balance residuals per scheme
//   convergence     error-vs-dt table with EOC column per scheme
//   check-structure structure-condition report at randomized states
//
// Every run writes a manifest.json with the settings, seed and wall time
// into the output directory. Exit status is 0 on success, nonzero with a
// message on any failure.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "phdg/experiments.hpp"
#include "phdg/io.hpp"
#include "phdg/models.hpp"

namespace phdg {

namespace detail {

inline std::vector<Scheme> parse_scheme_list(const std::string& csv) {
  std::vector<Scheme> schemes;
  std::string token;
  std::istringstream in(csv);
  while (std::getline(in, token, ',')) {
    if (!token.empty()) schemes.push_back(parse_scheme(token));
  }
  if (schemes.empty()) throw std::invalid_argument("no scheme given");
  return schemes;
}

inline Json newton_to_json(const NewtonSettings& s) {
  return Json{{"tol_residual", s.tol_residual},
              {"tol_step", s.tol_step},
              {"max_iter", s.max_iter},
              {"fd_jacobian_h", s.fd_jacobian_h},
              {"damping", s.damping}};
}

inline void write_manifest(const std::filesystem::path& dir, const std::string& model,
                           const Json& params, const std::string& scheme, const NewtonSettings& newton,
                           const Json& grid, std::uint64_t seed, double wall_time_s) {
  const Json manifest{{"model", model},
                      {"params", params},
                      {"scheme", scheme},
                      {"newton", newton_to_json(newton)},
                      {"grid", grid},
                      {"seed", seed},
                      {"wall_time_s", wall_time_s},
                      {"version", "0.1.0"}};
  std::ofstream out(dir / "manifest.json");
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << "\n";
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

}  // namespace detail

/// Runs the CLI on the given arguments (program name excluded).
inline int cli_main(std::vector<std::string> args) {
  CLI::App app{"structure-preserving time discretization of port-Hamiltonian systems", "phdg"};
  app.require_subcommand(1);

  std::string model_name, params_json = "{}", out_dir = "out";
  std::string scheme_one = "dgp", scheme_list = "dgp,implicit_midpoint";
  double dt = 1e-2, t_end = 1.0, newton_tol = 1e-13, tau_struct = kDefaultStructureTol;
  double dt_ref = 0.0;
  std::vector<double> dt_list;
  std::uint64_t seed = 0;
  int samples = 1000;

  auto add_common = [&](CLI::App* cmd, bool needs_scheme_list) {
    cmd->add_option("--model", model_name, "model name (pendulum | synthetic | advection_diffusion)")
        ->required();
    cmd->add_option("--params", params_json, "model parameters as a JSON object");
    if (needs_scheme_list) {
      cmd->add_option("--scheme", scheme_list, "comma-separated scheme list");
    }
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--newton-tol", newton_tol, "Newton residual tolerance (inf-norm)");
    cmd->add_option("--seed", seed, "seed recorded in the manifest and used for sampling");
  };

  CLI::App* sim = app.add_subcommand("simulate", "integrate one scheme and write the trajectory");
  add_common(sim, false);
  sim->add_option("--scheme", scheme_one, "integration scheme");
  sim->add_option("--dt", dt, "step size")->required();
  sim->add_option("--t-end", t_end, "end time")->required();

  CLI::App* pb = app.add_subcommand("power-balance", "per-interval discrete power balance residuals");
  add_common(pb, true);
  pb->add_option("--dt", dt, "step size")->required();
  pb->add_option("--t-end", t_end, "end time")->required();

  CLI::App* conv = app.add_subcommand("convergence", "error-vs-dt study against a radau5 reference");
  add_common(conv, true);
  conv->add_option("--dt-list", dt_list, "comma-separated step sizes")->delimiter(',');
  conv->add_option("--dt-ref", dt_ref, "reference step size (default: min(dt-list)/8)");
  conv->add_option("--t-end", t_end, "end time");

  CLI::App* chk = app.add_subcommand("check-structure", "structure conditions at randomized states");
  add_common(chk, false);
  chk->add_option("--samples", samples, "number of random states");
  chk->add_option("--tau", tau_struct, "structure tolerance");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (app.get_subcommands().empty() && e.get_name() == "RequiredError") {
      std::cerr << app.help() << std::flush;
    }
    return app.exit(e);
  }

  try {
    const Json params = Json::parse(params_json);
    const ModelSpec model = make_model(model_name, params);
    NewtonSettings newton;
    newton.tol_residual = newton_tol;
    const std::filesystem::path dir(out_dir);
    std::filesystem::create_directories(dir);
    detail::Timer timer;

    if (*sim) {
      SchemeConfig cfg;
      cfg.scheme = parse_scheme(scheme_one);
      cfg.newton = newton;
      const TimeGrid grid = make_uniform_grid(t_end, dt);
      const IntegrationResult res = integrate(model.system, cfg, grid, model.default_input, model.x0);
      write_states_csv(dir / "states.csv", res.trajectory);
      write_ports_csv(dir / "ports.csv", res.trajectory);
      detail::write_manifest(dir, model.name, model.params, scheme_one, newton,
                             Json{{"t_end", t_end}, {"dt", dt}, {"q", grid.size()}}, seed,
                             timer.seconds());
      if (!res.success) {
        std::cerr << "simulate: integration failed at " << res.message << "\n";
        return 1;
      }
      std::cout << "wrote " << (dir / "states.csv").string() << " and " << (dir / "ports.csv").string()
                << "\n";
      return 0;
    }

    if (*pb) {
      const auto schemes = detail::parse_scheme_list(scheme_list);
      const auto reports = run_power_balance(model, schemes, dt, t_end, newton);
      bool ok = true;
      for (const auto& [scheme, rep] : reports) {
        const auto path = dir / ("power_balance_" + to_string(scheme) + ".csv");
        write_power_balance_csv(path, rep);
        std::cout << to_string(scheme) << ": max |residual| = " << format_g17(rep.max_abs_residual)
                  << " -> " << path.string() << "\n";
        if (!rep.complete) {
          std::cerr << to_string(scheme) << ": integration failed at " << rep.message << "\n";
          ok = false;
        }
      }
      detail::write_manifest(dir, model.name, model.params, scheme_list, newton,
                             Json{{"t_end", t_end}, {"dt", dt}}, seed, timer.seconds());
      return ok ? 0 : 1;
    }

    if (*conv) {
      if (dt_list.empty()) {
        dt_list.resize(10);  // geometric halving over 10 levels from 1e-1
        for (std::size_t k = 0; k < dt_list.size(); ++k) dt_list[k] = 1e-1 / static_cast<double>(1 << k);
      }
      const double dt_min = *std::min_element(dt_list.begin(), dt_list.end());
      if (dt_ref <= 0.0) dt_ref = dt_min / 8.0;
      const auto schemes = detail::parse_scheme_list(scheme_list);
      SchemeConfig ref_cfg;
      ref_cfg.scheme = Scheme::radau5;
      ref_cfg.newton = newton;
      const auto tables = run_convergence(model, schemes, dt_list, ref_cfg, dt_ref, t_end, newton);
      for (const auto& [scheme, table] : tables) {
        const auto path = dir / ("convergence_" + to_string(scheme) + ".csv");
        write_convergence_csv(path, table);
        std::cout << to_string(scheme) << ": " << table.rows.size() << " levels -> " << path.string()
                  << "\n";
      }
      detail::write_manifest(dir, model.name, model.params, scheme_list, newton,
                             Json{{"t_end", t_end}, {"dt_list", dt_list}, {"dt_ref", dt_ref}}, seed,
                             timer.seconds());
      return 0;
    }

    if (*chk) {
      const auto states = sample_states(model.box_lo, model.box_hi, samples, seed);
      const StructureReport rep = check_ph_structure(model.system, states, tau_struct);
      std::cout << "skew defect          " << format_g17(rep.skew_defect) << "\n"
                << "symmetry defect      " << format_g17(rep.symmetry_defect) << "\n"
                << "min R eigenvalue     " << format_g17(rep.min_r_eigenvalue) << "\n"
                << "factorization defect " << format_g17(rep.factorization_defect) << "\n"
                << (rep.passed ? "PASS" : "FAIL") << " at tau = " << format_g17(rep.tau) << "\n";
      detail::write_manifest(dir, model.name, model.params, "", newton,
                             Json{{"samples", samples}, {"tau", tau_struct}}, seed, timer.seconds());
      return rep.passed ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace phdg
