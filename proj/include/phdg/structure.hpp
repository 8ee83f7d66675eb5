#pragma once

// Structure-condition checks: skew-symmetry of J, symmetry and positive
// semidefiniteness of R, and the gradient factorization E^T z = grad H,
// evaluated over caller-supplied sample states.

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>
#include <vector>

#include "phdg/system.hpp"

namespace phdg {

inline constexpr double kDefaultStructureTol = 1e-8;

/// Worst violation of each structure condition over a sample set, with the
/// state that attains it. R is checked through the eigenvalues of its
/// symmetric part; the factorization defect is relative to 1 + |gradH|.
struct StructureReport {
  double skew_defect = 0.0;           ///< max entry of |J + J^T|
  double symmetry_defect = 0.0;       ///< max entry of |R - R^T|
  double min_r_eigenvalue = std::numeric_limits<double>::infinity();
  double factorization_defect = 0.0;  ///< max |E^T z - gradH| / (1 + |gradH|)
  Vector skew_state, symmetry_state, eigenvalue_state, factorization_state;
  double tau = 0.0;
  bool passed = false;
};

inline StructureReport check_ph_structure(const PHSystem& sys, const std::vector<Vector>& samples,
                                          double tau_struct = kDefaultStructureTol) {
  if (samples.empty()) throw std::invalid_argument("check_ph_structure: samples must be nonempty");
  if (!(tau_struct > 0.0)) throw std::invalid_argument("check_ph_structure: tau_struct must be positive");
  validate_dimensions(sys, samples.front());

  StructureReport rep;
  rep.tau = tau_struct;
  for (const Vector& x : samples) {
    const Matrix j = sys.J(x);
    const double skew = (j + j.transpose()).cwiseAbs().maxCoeff();
    if (skew >= rep.skew_defect) {
      rep.skew_defect = skew;
      rep.skew_state = x;
    }

    const Matrix r = sys.R(x);
    const double sym = (r - r.transpose()).cwiseAbs().maxCoeff();
    if (sym >= rep.symmetry_defect) {
      rep.symmetry_defect = sym;
      rep.symmetry_state = x;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Matrix(0.5 * (r + r.transpose())),
                                              Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    if (lmin <= rep.min_r_eigenvalue) {
      rep.min_r_eigenvalue = lmin;
      rep.eigenvalue_state = x;
    }

    const Vector g = sys.gradH(x);
    const double fact = (sys.E(x).transpose() * sys.z(x) - g).norm() / (1.0 + g.norm());
    if (fact >= rep.factorization_defect) {
      rep.factorization_defect = fact;
      rep.factorization_state = x;
    }
  }
  rep.passed = rep.skew_defect <= tau_struct && rep.symmetry_defect <= tau_struct &&
               rep.min_r_eigenvalue >= -tau_struct && rep.factorization_defect <= tau_struct;
  return rep;
}

/// Residual of the continuous power balance
///   d/dt H(x) = -z^T R z + y^T u
/// for a candidate derivative xdot; zero whenever (x, xdot, u) satisfies the
/// state equation exactly. Sanity oracle for models with known solutions.
inline double continuous_power_residual(const PHSystem& sys, const Vector& x, const Vector& xdot,
                                        const Vector& u) {
  if (x.size() != sys.n || xdot.size() != sys.n || u.size() != sys.m) {
    throw std::invalid_argument("continuous_power_residual: dimension mismatch");
  }
  const Vector zx = sys.z(x);
  double res = sys.gradH(x).dot(xdot) + zx.dot(sys.R(x) * zx);
  if (sys.m > 0) res -= zx.dot(sys.B(x) * u);
  return res;
}

/// Max over samples of the relative mismatch between gradH and second-order
/// central differences of H with per-component step h_fd * (1 + |x_i|).
inline double max_gradient_fd_error(const ScalarFunction& H, const VectorFunction& gradH,
                                    const std::vector<Vector>& samples, double h_fd = 1e-5) {
  if (samples.empty()) throw std::invalid_argument("max_gradient_fd_error: samples must be nonempty");
  if (!(h_fd > 0.0)) throw std::invalid_argument("max_gradient_fd_error: h_fd must be positive");
  double worst = 0.0;
  for (const Vector& x : samples) {
    const Vector g = gradH(x);
    Vector xp = x;
    double err = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      const double h = h_fd * (1.0 + std::abs(x[i]));
      xp[i] = x[i] + h;
      const double hi = H(xp);
      xp[i] = x[i] - h;
      const double lo = H(xp);
      xp[i] = x[i];
      err = std::max(err, std::abs((hi - lo) / (2.0 * h) - g[i]));
    }
    worst = std::max(worst, err / (1.0 + g.lpNorm<Eigen::Infinity>()));
  }
  return worst;
}

}  // namespace phdg
