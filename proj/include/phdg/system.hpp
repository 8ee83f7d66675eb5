#pragma once

// Data model for nonlinear port-Hamiltonian systems with state-dependent
// mass matrix,
//
//   E(x) x' = (J(x) - R(x)) z(x) + B(x) u,      y = B(x)^T z(x),
//
// where pointwise J = -J^T, R = R^T >= 0 and E^T z = grad H, together with
// time grids and the discrete trajectories produced by the one-step schemes
// in integrators.hpp.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace phdg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

using ScalarFunction = std::function<double(const Vector&)>;
using VectorFunction = std::function<Vector(const Vector&)>;
using MatrixFunction = std::function<Matrix(const Vector&)>;

/// Input signal u: t -> R^m, evaluable pointwise on the whole time interval.
using InputSignal = std::function<Vector(double)>;

inline InputSignal zero_input(int m) {
  return [m](double) { return Vector::Zero(m); };
}

/// Callback bundle defining the system above.
///
/// All callbacks must be safe for concurrent read-only invocation; nothing
/// in this library mutates a PHSystem after construction.
struct PHSystem {
  int n = 0;             ///< state dimension (> 0)
  int m = 0;             ///< port dimension (>= 0)
  MatrixFunction E;      ///< mass matrix, n x n
  MatrixFunction J;      ///< structure matrix, n x n, skew-symmetric
  MatrixFunction R;      ///< dissipation matrix, n x n, symmetric PSD
  VectorFunction z;      ///< effort function, with E(x)^T z(x) = gradH(x)
  MatrixFunction B;      ///< port matrix, n x m
  ScalarFunction H;      ///< Hamiltonian
  VectorFunction gradH;  ///< gradient of the Hamiltonian
};

/// Evaluates every callback at x and throws std::invalid_argument on any
/// shape disagreement with (n, m).
inline void validate_dimensions(const PHSystem& sys, const Vector& x) {
  if (sys.n <= 0) throw std::invalid_argument("PHSystem: n must be positive");
  if (sys.m < 0) throw std::invalid_argument("PHSystem: m must be non-negative");
  if (x.size() != sys.n) {
    throw std::invalid_argument("PHSystem: test state has size " + std::to_string(x.size()) +
                                ", expected n = " + std::to_string(sys.n));
  }
  auto expect = [&](const char* name, Eigen::Index rows, Eigen::Index cols, Eigen::Index want_r,
                    Eigen::Index want_c) {
    if (rows != want_r || cols != want_c) {
      throw std::invalid_argument(std::string("PHSystem: callback ") + name + " returned " +
                                  std::to_string(rows) + "x" + std::to_string(cols) + ", expected " +
                                  std::to_string(want_r) + "x" + std::to_string(want_c));
    }
  };
  const Matrix e = sys.E(x);
  expect("E", e.rows(), e.cols(), sys.n, sys.n);
  const Matrix j = sys.J(x);
  expect("J", j.rows(), j.cols(), sys.n, sys.n);
  const Matrix r = sys.R(x);
  expect("R", r.rows(), r.cols(), sys.n, sys.n);
  const Vector zz = sys.z(x);
  expect("z", zz.size(), 1, sys.n, 1);
  const Matrix b = sys.B(x);
  expect("B", b.rows(), b.cols(), sys.n, sys.m);
  const Vector g = sys.gradH(x);
  expect("gradH", g.size(), 1, sys.n, 1);
  (void)sys.H(x);
}

/// Strictly increasing time points t_1 < ... < t_q with t_1 = 0 and q >= 2.
struct TimeGrid {
  std::vector<double> points;

  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> pts) : points(std::move(pts)) { validate(); }

  std::size_t size() const { return points.size(); }
  std::size_t intervals() const { return points.empty() ? 0 : points.size() - 1; }
  double t_end() const { return points.back(); }
  double dt(std::size_t k) const { return points[k + 1] - points[k]; }
  double midpoint(std::size_t k) const { return 0.5 * (points[k] + points[k + 1]); }

  void validate() const {
    if (points.size() < 2) throw std::invalid_argument("TimeGrid: need at least two points");
    if (points.front() != 0.0) throw std::invalid_argument("TimeGrid: first point must be 0");
    for (std::size_t k = 0; k + 1 < points.size(); ++k) {
      if (!(points[k] < points[k + 1])) {
        throw std::invalid_argument("TimeGrid: points must be strictly increasing (violated at index " +
                                    std::to_string(k + 1) + ")");
      }
    }
  }
};

/// Uniform grid 0, dt, 2*dt, ..., t_end. Requires dt to divide t_end.
inline TimeGrid make_uniform_grid(double t_end, double dt) {
  if (!(dt > 0.0) || !(t_end > 0.0)) throw std::invalid_argument("make_uniform_grid: need dt > 0 and t_end > 0");
  const double ratio = t_end / dt;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (steps < 1 || std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio)) {
    throw std::invalid_argument("make_uniform_grid: dt must divide t_end");
  }
  std::vector<double> pts(steps + 1);
  for (std::size_t i = 0; i <= steps; ++i) pts[i] = static_cast<double>(i) * dt;
  pts.back() = t_end;
  return TimeGrid(std::move(pts));
}

/// Discrete solution: states at every grid node, plus the per-interval
/// midpoint input samples and midpoint outputs recorded by the schemes.
struct Trajectory {
  TimeGrid grid;
  std::vector<Vector> states;       ///< q entries, states[0] is the initial condition
  std::vector<Vector> inputs_mid;   ///< q-1 entries, u(0.5*(t_k + t_{k+1}))
  std::vector<Vector> outputs_mid;  ///< q-1 entries, scheme-defined midpoint outputs
};

}  // namespace phdg
