#pragma once

// Experiment drivers: per-interval power-balance residuals of a computed
// trajectory, and convergence studies against a high-accuracy reference with
// experimental orders of convergence. Independent (scheme, dt) runs execute
// in a parallel work pool; reports are merged by scheme in a fixed order.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "phdg/integrators.hpp"
#include "phdg/models.hpp"
#include "phdg/system.hpp"

namespace phdg {

struct PowerBalanceRow {
  double t_mid = 0.0;
  double lhs = 0.0;          ///< (H(x_{k+1}) - H(x_k)) / dt
  double dissipation = 0.0;  ///< zbar^T Rbar zbar (or scheme analog)
  double supply = 0.0;       ///< y_mid^T u_mid
  double residual = 0.0;     ///< lhs + dissipation - supply
};

struct PowerBalanceReport {
  Scheme scheme = Scheme::dgp;
  std::vector<PowerBalanceRow> rows;
  double max_abs_residual = 0.0;
  std::optional<double> declared_bound;  ///< set for dgp, where the balance is exact up to solver tolerance
  bool complete = true;                  ///< false when the underlying integration failed early
  std::string message;
};

/// Recomputes the per-interval residuals of the discrete power balance from
/// a trajectory. For dgp the dissipation uses the midpoint pair and bars (the
/// quantities the scheme itself used); for the other schemes it uses the
/// state-average analogs z(mid), R(mid). The supply term is formed from the
/// recorded midpoint ports.
inline PowerBalanceReport compute_power_balance(const PHSystem& sys, Scheme scheme,
                                                const Trajectory& traj, double tol_residual = 1e-13) {
  if (traj.states.size() != traj.grid.size() || traj.inputs_mid.size() + 1 != traj.states.size() ||
      traj.outputs_mid.size() != traj.inputs_mid.size()) {
    throw std::invalid_argument("compute_power_balance: inconsistent trajectory");
  }
  PowerBalanceReport rep;
  rep.scheme = scheme;

  DiscreteGradientPair pair;
  BarCoefficients bars;
  if (scheme == Scheme::dgp) {
    pair = make_midpoint_discrete_gradient_pair(sys.H, sys.E, sys.z);
    bars = make_midpoint_bars(sys);
  }

  double max_effort = 0.0;
  double min_dt = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < traj.states.size(); ++k) {
    const Vector& xk = traj.states[k];
    const Vector& xn = traj.states[k + 1];
    const double dt = traj.grid.dt(k);
    min_dt = std::min(min_dt, dt);

    PowerBalanceRow row;
    row.t_mid = traj.grid.midpoint(k);
    row.lhs = (sys.H(xn) - sys.H(xk)) / dt;
    switch (scheme) {
      case Scheme::dgp: {
        const Vector zb = pair.zbar(xk, xn);
        row.dissipation = zb.dot(bars.Rbar(xk, xn) * zb);
        max_effort = std::max(max_effort, zb.norm());
        break;
      }
      case Scheme::classical_dg:
        row.dissipation = 0.0;
        break;
      case Scheme::implicit_midpoint:
      case Scheme::radau5: {
        const Vector mid = 0.5 * (xk + xn);
        const Vector zm = sys.z(mid);
        row.dissipation = zm.dot(sys.R(mid) * zm);
        break;
      }
    }
    row.supply = traj.outputs_mid[k].dot(traj.inputs_mid[k]);
    row.residual = row.lhs + row.dissipation - row.supply;
    rep.max_abs_residual = std::max(rep.max_abs_residual, std::abs(row.residual));
    rep.rows.push_back(row);
  }
  if (scheme == Scheme::dgp) {
    rep.declared_bound = 100.0 * tol_residual * (1.0 + max_effort) / min_dt;
  }
  return rep;
}

/// Integrates each scheme on a uniform grid and reports the per-interval
/// power-balance residuals; an integration failure yields a partial report
/// with complete = false.
inline std::map<Scheme, PowerBalanceReport> run_power_balance(const ModelSpec& model,
                                                              const std::vector<Scheme>& schemes,
                                                              double dt, double t_end,
                                                              const NewtonSettings& newton = {}) {
  const TimeGrid grid = make_uniform_grid(t_end, dt);  // rejects dt not dividing t_end
  std::vector<std::future<std::pair<Scheme, PowerBalanceReport>>> jobs;
  for (const Scheme scheme : schemes) {
    jobs.push_back(std::async(std::launch::async, [&, scheme] {
      SchemeConfig cfg;
      cfg.scheme = scheme;
      cfg.newton = newton;
      IntegrationResult res = integrate(model.system, cfg, grid, model.default_input, model.x0);
      PowerBalanceReport rep =
          compute_power_balance(model.system, scheme, res.trajectory, newton.tol_residual);
      rep.complete = res.success;
      rep.message = res.message;
      return std::make_pair(scheme, std::move(rep));
    }));
  }
  std::map<Scheme, PowerBalanceReport> out;
  for (auto& job : jobs) {
    auto [scheme, rep] = job.get();
    out[scheme] = std::move(rep);
  }
  return out;
}

struct ConvergenceRow {
  double dt = 0.0;
  double rel_error = 0.0;
  std::optional<double> eoc;  ///< defined from the second row on
};

struct ConvergenceTable {
  Scheme scheme = Scheme::dgp;
  std::vector<ConvergenceRow> rows;  ///< dt strictly decreasing
  std::string reference;
};

/// log(err_coarse / err_fine) / log(dt_coarse / dt_fine); equals the base-2
/// ratio for halved steps.
inline double compute_eoc(double dt_coarse, double err_coarse, double dt_fine, double err_fine) {
  return std::log(err_coarse / err_fine) / std::log(dt_coarse / dt_fine);
}

/// Restricts a fine-grid trajectory to the nodes of a coarse grid by index
/// stride. Throws std::invalid_argument when the grids do not align.
inline std::vector<Vector> restrict_to_grid(const Trajectory& fine, const TimeGrid& coarse) {
  const std::size_t fine_intervals = fine.grid.intervals();
  const std::size_t coarse_intervals = coarse.intervals();
  if (fine_intervals % coarse_intervals != 0) {
    throw std::invalid_argument("restrict_to_grid: grids are misaligned (interval counts)");
  }
  const std::size_t stride = fine_intervals / coarse_intervals;
  std::vector<Vector> out;
  out.reserve(coarse.size());
  for (std::size_t k = 0; k < coarse.size(); ++k) {
    const double t_fine = fine.grid.points[k * stride];
    if (std::abs(t_fine - coarse.points[k]) > 1e-9 * (1.0 + std::abs(coarse.points[k]))) {
      throw std::invalid_argument("restrict_to_grid: grids are misaligned (node times)");
    }
    out.push_back(fine.states[k * stride]);
  }
  return out;
}

/// Relative error between two snapshot sequences in the Frobenius norm of
/// the stacked state matrices.
inline double snapshot_relative_error(const std::vector<Vector>& states,
                                      const std::vector<Vector>& reference) {
  if (states.size() != reference.size()) {
    throw std::invalid_argument("snapshot_relative_error: snapshot counts disagree");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    num += (states[k] - reference[k]).squaredNorm();
    den += reference[k].squaredNorm();
  }
  if (den == 0.0) throw std::invalid_argument("snapshot_relative_error: reference is identically zero");
  return std::sqrt(num / den);
}

/// Convergence study: one reference trajectory at dt_ref (typically radau5),
/// then each (scheme, dt) run compared on the coarse nodes; the EOC column
/// is filled per consecutive pair of rows.
inline std::map<Scheme, ConvergenceTable> run_convergence(const ModelSpec& model,
                                                          const std::vector<Scheme>& schemes,
                                                          std::vector<double> dt_list,
                                                          const SchemeConfig& reference_cfg,
                                                          double dt_ref, double t_end,
                                                          const NewtonSettings& newton = {}) {
  if (dt_list.empty()) throw std::invalid_argument("run_convergence: dt_list must be nonempty");
  std::sort(dt_list.begin(), dt_list.end(), std::greater<double>());
  const double dt_min = dt_list.back();
  if (!(dt_ref > 0.0) || dt_ref > dt_min / 4.0) {
    throw std::invalid_argument("run_convergence: need dt_ref <= min(dt_list) / 4");
  }
  for (double dt : dt_list) {
    const double ratio = dt / dt_ref;
    if (std::abs(ratio - std::llround(ratio)) > 1e-9 * ratio) {
      throw std::invalid_argument("run_convergence: dt_ref does not divide dt = " + std::to_string(dt));
    }
  }

  const TimeGrid ref_grid = make_uniform_grid(t_end, dt_ref);
  IntegrationResult ref = integrate(model.system, reference_cfg, ref_grid, model.default_input, model.x0);
  if (!ref.success) {
    throw std::runtime_error("run_convergence: reference integration failed: " + ref.message);
  }

  struct Job {
    Scheme scheme;
    double dt;
    std::future<double> error;
  };
  std::vector<Job> jobs;
  for (const Scheme scheme : schemes) {
    for (const double dt : dt_list) {
      jobs.push_back({scheme, dt, std::async(std::launch::async, [&, scheme, dt] {
                        const TimeGrid grid = make_uniform_grid(t_end, dt);
                        SchemeConfig cfg;
                        cfg.scheme = scheme;
                        cfg.newton = newton;
                        IntegrationResult res =
                            integrate(model.system, cfg, grid, model.default_input, model.x0);
                        if (!res.success) {
                          throw std::runtime_error("run_convergence: " + to_string(scheme) + " at dt = " +
                                                   std::to_string(dt) + " failed: " + res.message);
                        }
                        return snapshot_relative_error(res.trajectory.states,
                                                       restrict_to_grid(ref.trajectory, grid));
                      })});
    }
  }

  std::map<Scheme, ConvergenceTable> out;
  for (const Scheme scheme : schemes) {
    ConvergenceTable& table = out[scheme];
    table.scheme = scheme;
    table.reference = to_string(reference_cfg.scheme) + " reference at dt_ref = " + std::to_string(dt_ref);
  }
  for (auto& job : jobs) {
    ConvergenceTable& table = out[job.scheme];
    ConvergenceRow row;
    row.dt = job.dt;
    row.rel_error = job.error.get();
    if (!table.rows.empty()) {
      const ConvergenceRow& prev = table.rows.back();
      row.eoc = compute_eoc(prev.dt, prev.rel_error, row.dt, row.rel_error);
    }
    table.rows.push_back(row);
  }
  return out;
}

}  // namespace phdg
