#pragma once

// One-step time discretization schemes:
//
//  * dgp: the discrete gradient pair scheme
//      Ebar(xk, x^) (x^ - xk) = dt (Jbar - Rbar) zbar(xk, x^) + dt Bbar u_mid,
//      y_mid = Bbar^T zbar,
//    which satisfies the discrete power balance
//      (H(x^) - H(xk)) / dt = -zbar^T Rbar zbar + y_mid^T u_mid
//    exactly up to the nonlinear-solver tolerance, for any Hamiltonian and
//    any (possibly singular) mass matrix admitting a discrete gradient pair.
//  * classical_dg: x^ = xk + dt J dg(xk, x^) for conservative Hamiltonian
//    systems x' = J gradH(x) with constant skew J; conserves H exactly.
//  * implicit_midpoint: coefficients and effort evaluated at (xk + x^)/2.
//  * radau5: 3-stage Radau IIA of order 5 on the explicitly transformed
//    system, used as high-accuracy reference.
//
// All implicit relations are solved with newton_solve; the mass matrix is
// kept multiplied onto the state difference, never inverted, except in the
// explicit transform.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "phdg/discrete_gradient.hpp"
#include "phdg/newton.hpp"
#include "phdg/system.hpp"

namespace phdg {

enum class Scheme { dgp, classical_dg, implicit_midpoint, radau5 };

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::dgp: return "dgp";
    case Scheme::classical_dg: return "classical_dg";
    case Scheme::implicit_midpoint: return "implicit_midpoint";
    case Scheme::radau5: return "radau5";
  }
  return "unknown";
}

inline Scheme parse_scheme(std::string_view name) {
  if (name == "dgp") return Scheme::dgp;
  if (name == "classical_dg") return Scheme::classical_dg;
  if (name == "implicit_midpoint") return Scheme::implicit_midpoint;
  if (name == "radau5") return Scheme::radau5;
  throw std::invalid_argument("unknown scheme '" + std::string(name) +
                              "' (expected dgp | classical_dg | implicit_midpoint | radau5)");
}

enum class Predictor { previous_state, explicit_euler };

struct SchemeConfig {
  Scheme scheme = Scheme::dgp;
  NewtonSettings newton{};
  Predictor predictor = Predictor::previous_state;
};

/// Two-point approximations of J, R, B entering the dgp scheme. Jbar must be
/// pointwise skew-symmetric, Rbar symmetric PSD, and all three must reduce to
/// J, R, B on the diagonal.
struct BarCoefficients {
  TwoPointMatrixFunction Jbar;
  TwoPointMatrixFunction Rbar;
  TwoPointMatrixFunction Bbar;
};

/// Midpoint bars J((x+x^)/2) etc.; these satisfy all required properties.
inline BarCoefficients make_midpoint_bars(const PHSystem& sys) {
  return {
      [J = sys.J](const Vector& x, const Vector& xhat) { return Matrix(J(0.5 * (x + xhat))); },
      [R = sys.R](const Vector& x, const Vector& xhat) { return Matrix(R(0.5 * (x + xhat))); },
      [B = sys.B](const Vector& x, const Vector& xhat) { return Matrix(B(0.5 * (x + xhat))); },
  };
}

/// Thrown by step operations when the nonlinear solve does not converge;
/// carries the solver diagnostics.
class StepError : public std::runtime_error {
 public:
  StepError(const std::string& what, NewtonResult diag)
      : std::runtime_error(what), newton(std::move(diag)) {}
  NewtonResult newton;
};

/// Thrown when a mass matrix must be inverted but is singular at the state.
class SingularMassError : public std::runtime_error {
 public:
  SingularMassError(const std::string& what, Vector state_)
      : std::runtime_error(what), state(std::move(state_)) {}
  Vector state;
};

struct StepResult {
  Vector x_next;
  Vector y_mid;
  NewtonResult newton;
};

/// The transformed explicit form x' = E^{-1}[(J - R) z + B u], realized via
/// linear solves. rhs takes the input value already sampled at time t.
struct ExplicitODE {
  int n = 0;
  int m = 0;
  std::function<Vector(double, const Vector&, const Vector&)> rhs;
  VectorFunction output;  ///< y = B(x)^T z(x)
};

inline ExplicitODE transform_to_explicit(const PHSystem& sys) {
  ExplicitODE ode;
  ode.n = sys.n;
  ode.m = sys.m;
  ode.rhs = [E = sys.E, J = sys.J, R = sys.R, z = sys.z, B = sys.B, m = sys.m](
                double, const Vector& x, const Vector& u_t) {
    Vector rhs_vec = (J(x) - R(x)) * z(x);
    if (m > 0) rhs_vec += B(x) * u_t;
    Eigen::FullPivLU<Matrix> lu(Matrix(E(x)));
    if (!lu.isInvertible()) {
      throw SingularMassError("transform_to_explicit: singular mass matrix at evaluation point", x);
    }
    return Vector(lu.solve(rhs_vec));
  };
  ode.output = [B = sys.B, z = sys.z](const Vector& x) { return Vector(B(x).transpose() * z(x)); };
  return ode;
}

namespace detail {

inline Vector predict_state(const PHSystem& sys, const Vector& xk, const Vector& u_sample, double dt,
                            Predictor predictor) {
  if (predictor == Predictor::previous_state) return xk;
  Vector rhs = (sys.J(xk) - sys.R(xk)) * sys.z(xk);
  if (sys.m > 0) rhs += sys.B(xk) * u_sample;
  Eigen::FullPivLU<Matrix> lu(Matrix(sys.E(xk)));
  if (!lu.isInvertible()) {
    throw SingularMassError("explicit Euler predictor: singular mass matrix", xk);
  }
  return xk + dt * Vector(lu.solve(rhs));
}

}  // namespace detail

/// One step of the discrete gradient pair scheme. x_next solves the implicit
/// residual to Newton tolerance; y_mid = Bbar(xk, x_next)^T zbar(xk, x_next).
inline StepResult dgp_step(const PHSystem& sys, const DiscreteGradientPair& pair,
                           const BarCoefficients& bars, const Vector& xk, const Vector& u_mid,
                           double dt, const SchemeConfig& cfg) {
  if (!(dt > 0.0)) throw std::invalid_argument("dgp_step: dt must be positive");
  if (u_mid.size() != sys.m) throw std::invalid_argument("dgp_step: input sample has wrong dimension");
  auto residual = [&](const Vector& xhat) {
    const Vector zb = pair.zbar(xk, xhat);
    Vector r = pair.Ebar(xk, xhat) * (xhat - xk) -
               dt * ((bars.Jbar(xk, xhat) - bars.Rbar(xk, xhat)) * zb);
    if (sys.m > 0) r -= dt * (bars.Bbar(xk, xhat) * u_mid);
    return r;
  };
  const Vector x0 = detail::predict_state(sys, xk, u_mid, dt, cfg.predictor);
  NewtonResult nr = newton_solve(residual, x0, cfg.newton);
  if (!nr.converged) {
    const std::string msg = "dgp_step: Newton did not converge (" +
                            std::string(to_string(nr.status)) + ", residual " +
                            std::to_string(nr.residual_norm) + ")";
    throw StepError(msg, std::move(nr));
  }
  const Vector zb = pair.zbar(xk, nr.solution);
  Vector y = bars.Bbar(xk, nr.solution).transpose() * zb;
  return {nr.solution, std::move(y), std::move(nr)};
}

/// One step of the classical discrete gradient scheme for x' = J gradH(x)
/// with constant skew-symmetric J; conserves H up to solver tolerance.
inline Vector classical_dg_step(const DiscreteGradient& dg, const Matrix& j_const, const Vector& xk,
                                double dt, const SchemeConfig& cfg) {
  if (!(dt > 0.0)) throw std::invalid_argument("classical_dg_step: dt must be positive");
  const double skew = (j_const + j_const.transpose()).cwiseAbs().maxCoeff();
  if (skew > 1e-12 * (1.0 + j_const.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("classical_dg_step: J must be skew-symmetric");
  }
  auto residual = [&](const Vector& xhat) {
    return Vector(xhat - xk - dt * (j_const * dg.dg(xk, xhat)));
  };
  Vector x0 = xk;
  if (cfg.predictor == Predictor::explicit_euler) x0 = xk + dt * (j_const * dg.gradH(xk));
  NewtonResult nr = newton_solve(residual, x0, cfg.newton);
  if (!nr.converged) {
    const std::string msg =
        "classical_dg_step: Newton did not converge (" + std::string(to_string(nr.status)) + ")";
    throw StepError(msg, std::move(nr));
  }
  return nr.solution;
}

/// One step of the implicit midpoint rule applied to the pH system; all
/// coefficients and the effort are evaluated at (xk + x^)/2.
inline StepResult implicit_midpoint_step(const PHSystem& sys, const Vector& xk, const Vector& u_mid,
                                         double dt, const SchemeConfig& cfg) {
  if (!(dt > 0.0)) throw std::invalid_argument("implicit_midpoint_step: dt must be positive");
  if (u_mid.size() != sys.m) {
    throw std::invalid_argument("implicit_midpoint_step: input sample has wrong dimension");
  }
  auto residual = [&](const Vector& xhat) {
    const Vector mid = 0.5 * (xk + xhat);
    Vector r = sys.E(mid) * (xhat - xk) - dt * ((sys.J(mid) - sys.R(mid)) * sys.z(mid));
    if (sys.m > 0) r -= dt * (sys.B(mid) * u_mid);
    return r;
  };
  const Vector x0 = detail::predict_state(sys, xk, u_mid, dt, cfg.predictor);
  NewtonResult nr = newton_solve(residual, x0, cfg.newton);
  if (!nr.converged) {
    const std::string msg = "implicit_midpoint_step: Newton did not converge (" +
                            std::string(to_string(nr.status)) + ", residual " +
                            std::to_string(nr.residual_norm) + ")";
    throw StepError(msg, std::move(nr));
  }
  const Vector mid = 0.5 * (xk + nr.solution);
  Vector y = sys.B(mid).transpose() * sys.z(mid);
  return {nr.solution, std::move(y), std::move(nr)};
}

/// Butcher data of the 3-stage Radau IIA method of order 5
/// (Hairer & Wanner, Solving ODEs II, table 5.6).
struct Radau5Tableau {
  Eigen::Matrix3d a;
  Eigen::Vector3d c;

  Radau5Tableau() {
    const double s6 = std::sqrt(6.0);
    a << (88.0 - 7.0 * s6) / 360.0, (296.0 - 169.0 * s6) / 1800.0, (-2.0 + 3.0 * s6) / 225.0,
        (296.0 + 169.0 * s6) / 1800.0, (88.0 + 7.0 * s6) / 360.0, (-2.0 - 3.0 * s6) / 225.0,
        (16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0;
    c << (4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0;
  }
};

/// One Radau IIA(5) step on the transformed explicit system: the 3n stage
/// states are solved as one Newton system; the method is stiffly accurate,
/// so the last stage is the new state.
inline Vector radau5_step(const ExplicitODE& ode, const Vector& xk, const InputSignal& u, double t,
                          double dt, const SchemeConfig& cfg) {
  if (!(dt > 0.0)) throw std::invalid_argument("radau5_step: dt must be positive");
  static const Radau5Tableau tab;
  const auto n = xk.size();

  std::array<Vector, 3> u_stage;
  for (int i = 0; i < 3; ++i) {
    u_stage[i] = ode.m > 0 ? u(t + tab.c[i] * dt) : Vector(0);
    if (u_stage[i].size() != ode.m) throw std::invalid_argument("radau5_step: input sample has wrong dimension");
  }

  auto residual = [&](const Vector& stages) {
    std::array<Vector, 3> f;
    for (int j = 0; j < 3; ++j) {
      f[j] = ode.rhs(t + tab.c[j] * dt, stages.segment(j * n, n), u_stage[j]);
    }
    Vector r(3 * n);
    for (int i = 0; i < 3; ++i) {
      r.segment(i * n, n) =
          stages.segment(i * n, n) - xk - dt * (tab.a(i, 0) * f[0] + tab.a(i, 1) * f[1] + tab.a(i, 2) * f[2]);
    }
    return r;
  };

  Vector stages0(3 * n);
  if (cfg.predictor == Predictor::explicit_euler) {
    const Vector f0 = ode.rhs(t, xk, ode.m > 0 ? u(t) : Vector(0));
    for (int i = 0; i < 3; ++i) stages0.segment(i * n, n) = xk + tab.c[i] * dt * f0;
  } else {
    for (int i = 0; i < 3; ++i) stages0.segment(i * n, n) = xk;
  }

  NewtonResult nr = newton_solve(residual, stages0, cfg.newton);
  if (!nr.converged) {
    const std::string msg =
        "radau5_step: Newton did not converge (" + std::string(to_string(nr.status)) + ")";
    throw StepError(msg, std::move(nr));
  }
  return nr.solution.tail(n);
}

inline constexpr std::size_t kNoFailedInterval = static_cast<std::size_t>(-1);

/// Trajectory plus failure diagnostics; on failure the trajectory holds the
/// part computed before the first failing interval.
struct IntegrationResult {
  Trajectory trajectory;
  bool success = false;
  std::size_t failed_interval = kNoFailedInterval;
  std::string message;
};

/// Applies the configured scheme over all grid intervals, sampling u at the
/// interval midpoints. Midpoint outputs are B^T z evaluated per scheme: at
/// (xk, x_next) through the bars/pair for dgp, at the state average for the
/// other port-aware schemes.
inline IntegrationResult integrate(const PHSystem& sys, const SchemeConfig& cfg, const TimeGrid& grid,
                                   const InputSignal& u, const Vector& x0) {
  grid.validate();
  if (x0.size() != sys.n) throw std::invalid_argument("integrate: x0 has wrong dimension");
  if (sys.m > 0 && !u) throw std::invalid_argument("integrate: system has ports but no input signal given");

  auto sample_input = [&](double t) { return sys.m > 0 ? u(t) : Vector(0); };

  IntegrationResult out;
  out.trajectory.grid.points.push_back(grid.points.front());
  out.trajectory.states.push_back(x0);

  // Scheme-specific machinery, built once.
  DiscreteGradientPair pair;
  BarCoefficients bars;
  DiscreteGradient dg;
  Matrix j_const;
  ExplicitODE ode;
  switch (cfg.scheme) {
    case Scheme::dgp:
      pair = make_midpoint_discrete_gradient_pair(sys.H, sys.E, sys.z);
      bars = make_midpoint_bars(sys);
      break;
    case Scheme::classical_dg: {
      if (sys.m != 0) {
        throw std::invalid_argument("integrate: classical_dg requires a system without ports (m = 0)");
      }
      const auto n = sys.n;
      if ((sys.E(x0) - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-12 ||
          sys.R(x0).cwiseAbs().maxCoeff() > 1e-12) {
        throw std::invalid_argument("integrate: classical_dg requires E = I and R = 0");
      }
      j_const = sys.J(x0);
      const Vector probe = x0 + Vector::Constant(n, 0.1);
      if ((sys.J(probe) - j_const).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + j_const.cwiseAbs().maxCoeff())) {
        throw std::invalid_argument("integrate: classical_dg requires a constant structure matrix J");
      }
      dg = make_midpoint_discrete_gradient(sys.H, sys.gradH);
      break;
    }
    case Scheme::implicit_midpoint:
      break;
    case Scheme::radau5:
      ode = transform_to_explicit(sys);
      break;
  }

  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double dt = grid.dt(k);
    const double t_mid = grid.midpoint(k);
    try {
      const Vector& xk = out.trajectory.states.back();
      const Vector u_mid = sample_input(t_mid);
      Vector x_next, y_mid;
      switch (cfg.scheme) {
        case Scheme::dgp: {
          StepResult st = dgp_step(sys, pair, bars, xk, u_mid, dt, cfg);
          x_next = std::move(st.x_next);
          y_mid = std::move(st.y_mid);
          break;
        }
        case Scheme::classical_dg:
          x_next = classical_dg_step(dg, j_const, xk, dt, cfg);
          y_mid = Vector(0);
          break;
        case Scheme::implicit_midpoint: {
          StepResult st = implicit_midpoint_step(sys, xk, u_mid, dt, cfg);
          x_next = std::move(st.x_next);
          y_mid = std::move(st.y_mid);
          break;
        }
        case Scheme::radau5: {
          x_next = radau5_step(ode, xk, u, grid.points[k], dt, cfg);
          y_mid = ode.output(Vector(0.5 * (xk + x_next)));
          break;
        }
      }
      out.trajectory.inputs_mid.push_back(u_mid);
      out.trajectory.outputs_mid.push_back(std::move(y_mid));
      out.trajectory.states.push_back(std::move(x_next));
      out.trajectory.grid.points.push_back(grid.points[k + 1]);
    } catch (const std::exception& err) {
      out.success = false;
      out.failed_interval = k;
      out.message = "interval " + std::to_string(k) + " (t = " + std::to_string(grid.points[k]) +
                    "): " + err.what();
      return out;
    }
  }
  out.success = true;
  return out;
}

}  // namespace phdg
