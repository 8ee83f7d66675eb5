#pragma once

// Damped Newton solver for the per-step implicit residual equations of the
// one-step schemes. Dense LU for the linear solves, forward finite
// differences for the Jacobian unless an analytic one is supplied, and an
// Armijo-style halving line search.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "phdg/system.hpp"

namespace phdg {

struct NewtonSettings {
  double tol_residual = 1e-13;  ///< convergence: |F(x)|_inf <= tol_residual
  double tol_step = 1e-8;       ///< stagnation guard on |update|_inf
  int max_iter = 50;
  double fd_jacobian_h = 1e-8;  ///< forward-difference step, scaled by 1 + |x_i|
  int damping = 8;              ///< max line-search halvings per iteration
  /// Extra full steps taken after the residual criterion is met, each kept
  /// only if it strictly reduces the residual. Drives the converged residual
  /// to the roundoff floor instead of the stopping tolerance, so identities
  /// that hold "up to solver tolerance" are not limited by it.
  int polish_iterations = 1;
};

enum class NewtonStatus {
  converged,
  max_iterations,
  singular_jacobian,
  line_search_stalled,
  step_stagnated,
  non_finite_residual,
};

inline const char* to_string(NewtonStatus s) {
  switch (s) {
    case NewtonStatus::converged: return "converged";
    case NewtonStatus::max_iterations: return "max iterations reached";
    case NewtonStatus::singular_jacobian: return "singular Jacobian in linear solve";
    case NewtonStatus::line_search_stalled: return "line search found no decrease";
    case NewtonStatus::step_stagnated: return "update below tol_step without residual convergence";
    case NewtonStatus::non_finite_residual: return "residual not finite";
  }
  return "unknown";
}

/// converged is set only when residual_norm <= tol_residual; on failure the
/// result carries the best iterate seen and its residual norm.
struct NewtonResult {
  Vector solution;
  int iterations = 0;  ///< updates taken to meet the stopping criterion (polish steps excluded)
  double residual_norm = std::numeric_limits<double>::infinity();
  bool converged = false;
  NewtonStatus status = NewtonStatus::max_iterations;
  std::vector<double> residual_history;  ///< |F|_inf after each accepted iterate
};

using ResidualFunction = std::function<Vector(const Vector&)>;
using JacobianFunction = std::function<Matrix(const Vector&)>;

/// Forward-difference Jacobian of F at x, reusing the residual value fx.
inline Matrix fd_jacobian(const ResidualFunction& F, const Vector& x, const Vector& fx, double h_rel) {
  Matrix jac(fx.size(), x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = h_rel * (1.0 + std::abs(x[i]));
    xp[i] = x[i] + h;
    jac.col(i) = (F(xp) - fx) / h;
    xp[i] = x[i];
  }
  return jac;
}

inline NewtonResult newton_solve(const ResidualFunction& F, const Vector& x0,
                                 const NewtonSettings& settings = {},
                                 const JacobianFunction& jacobian = nullptr) {
  if (!(settings.tol_residual > 0.0) || !(settings.tol_step > 0.0)) {
    throw std::invalid_argument("newton_solve: tolerances must be positive");
  }
  if (settings.max_iter < 1) throw std::invalid_argument("newton_solve: max_iter must be >= 1");
  if (!(settings.fd_jacobian_h > 0.0)) throw std::invalid_argument("newton_solve: fd_jacobian_h must be positive");

  NewtonResult out;
  Vector x = x0;
  Vector fx = F(x);
  if (fx.size() != x.size()) {
    throw std::invalid_argument("newton_solve: residual size does not match unknown size");
  }
  double rnorm = fx.lpNorm<Eigen::Infinity>();
  out.residual_history.push_back(rnorm);
  NewtonStatus status = NewtonStatus::max_iterations;

  for (int it = 0; it < settings.max_iter; ++it) {
    if (!std::isfinite(rnorm)) {
      status = NewtonStatus::non_finite_residual;
      break;
    }
    if (rnorm <= settings.tol_residual) break;

    const Matrix jac = jacobian ? jacobian(x) : fd_jacobian(F, x, fx, settings.fd_jacobian_h);
    const Vector dx = Eigen::PartialPivLU<Matrix>(jac).solve(-fx);
    if (!dx.allFinite()) {
      status = NewtonStatus::singular_jacobian;
      break;
    }

    // Halving line search with Armijo-style sufficient decrease on |F|_inf.
    double step = 1.0;
    bool accepted = false;
    double best_norm = std::numeric_limits<double>::infinity();
    Vector best_x, best_f;
    for (int k = 0; k <= settings.damping; ++k) {
      const Vector xt = x + step * dx;
      const Vector ft = F(xt);
      const double rt = ft.lpNorm<Eigen::Infinity>();
      if (std::isfinite(rt) && rt < best_norm) {
        best_norm = rt;
        best_x = xt;
        best_f = ft;
      }
      if (std::isfinite(rt) && rt <= (1.0 - 1e-4 * step) * rnorm) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (best_norm < rnorm) {  // plain decrease still moves us forward
        accepted = true;
      } else {
        status = NewtonStatus::line_search_stalled;
        break;
      }
    }
    const double step_norm = (best_x - x).lpNorm<Eigen::Infinity>();
    x = best_x;
    fx = best_f;
    rnorm = best_norm;
    ++out.iterations;
    out.residual_history.push_back(rnorm);
    if (rnorm > settings.tol_residual && step_norm <= settings.tol_step) {
      status = NewtonStatus::step_stagnated;
      break;
    }
  }

  out.converged = std::isfinite(rnorm) && rnorm <= settings.tol_residual;
  if (out.converged) {
    for (int p = 0; p < settings.polish_iterations; ++p) {
      const Matrix jac = jacobian ? jacobian(x) : fd_jacobian(F, x, fx, settings.fd_jacobian_h);
      const Vector dx = Eigen::PartialPivLU<Matrix>(jac).solve(-fx);
      if (!dx.allFinite()) break;
      const Vector xt = x + dx;
      const Vector ft = F(xt);
      const double rt = ft.lpNorm<Eigen::Infinity>();
      if (!std::isfinite(rt) || rt >= rnorm) break;
      x = xt;
      fx = ft;
      rnorm = rt;
      out.residual_history.push_back(rnorm);
    }
  }
  out.solution = x;
  out.residual_norm = rnorm;
  out.status = out.converged ? NewtonStatus::converged : status;
  return out;
}

}  // namespace phdg
