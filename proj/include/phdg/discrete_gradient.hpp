#pragma once

// Discrete gradients and discrete gradient pairs.
//
// A discrete gradient of H is a two-point function that agrees with gradH on
// the diagonal and satisfies the secant identity
//   dg(x, xhat)^T (xhat - x) = H(xhat) - H(x)
// exactly. A discrete gradient pair (Ebar, zbar) generalizes this to factored
// gradients E^T z = gradH:
//   zbar(x, xhat)^T Ebar(x, xhat) (xhat - x) = H(xhat) - H(x),
// with Ebar(x, x) = E(x) and zbar(x, x) = z(x). The midpoint constructions
// evaluate at (x + xhat)/2 and add a rank-one secant correction along
// xhat - x; they require E to be symmetric positive definite where used.

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "phdg/system.hpp"

namespace phdg {

/// Half-width of the relative diagonal band |xhat - x| <= tau * (1 + |x|)
/// inside which the midpoint constructions return their diagonal branch.
/// Below this band the secant correction is a 0/0 quotient dominated by
/// roundoff; continuity of the construction makes the branch values agree.
inline constexpr double kDiagonalTol = 1e-14;

inline bool near_diagonal(const Vector& x, const Vector& xhat, double tau_diag) {
  return (xhat - x).norm() <= tau_diag * (1.0 + x.norm());
}

using TwoPointVectorFunction = std::function<Vector(const Vector&, const Vector&)>;
using TwoPointMatrixFunction = std::function<Matrix(const Vector&, const Vector&)>;

/// Two-point gradient surrogate plus the (H, gradH) it belongs to.
struct DiscreteGradient {
  TwoPointVectorFunction dg;
  ScalarFunction H;
  VectorFunction gradH;
};

/// Two-point mass/effort surrogate plus the (H, E, z) it belongs to.
struct DiscreteGradientPair {
  TwoPointMatrixFunction Ebar;
  TwoPointVectorFunction zbar;
  ScalarFunction H;
  MatrixFunction E;
  VectorFunction z;
};

/// Thrown when the secant-correction denominator d^T Ebar d is non-positive
/// away from the diagonal, i.e. the mass matrix is not positive definite at
/// the midpoint of the offending state pair.
class SpdViolationError : public std::runtime_error {
 public:
  SpdViolationError(const std::string& what, Vector x_, Vector xhat_)
      : std::runtime_error(what), x(std::move(x_)), xhat(std::move(xhat_)) {}
  Vector x, xhat;
};

/// Midpoint discrete gradient: gradH((x+xhat)/2) plus the secant correction,
/// or gradH(x) within the diagonal band.
inline Vector midpoint_discrete_gradient(const ScalarFunction& H, const VectorFunction& gradH,
                                         const Vector& x, const Vector& xhat,
                                         double tau_diag = kDiagonalTol) {
  if (!(tau_diag > 0.0)) throw std::invalid_argument("midpoint_discrete_gradient: tau_diag must be positive");
  if (near_diagonal(x, xhat, tau_diag)) return gradH(x);
  const Vector d = xhat - x;
  const Vector g = gradH(0.5 * (x + xhat));
  const double correction = (H(xhat) - H(x) - g.dot(d)) / d.squaredNorm();
  return g + correction * d;
}

inline DiscreteGradient make_midpoint_discrete_gradient(ScalarFunction H, VectorFunction gradH,
                                                        double tau_diag = kDiagonalTol) {
  DiscreteGradient out;
  out.H = H;
  out.gradH = gradH;
  out.dg = [H = std::move(H), gradH = std::move(gradH), tau_diag](const Vector& x, const Vector& xhat) {
    return midpoint_discrete_gradient(H, gradH, x, xhat, tau_diag);
  };
  return out;
}

/// Midpoint discrete gradient pair for (H, E, z) with E pointwise symmetric
/// positive definite: Ebar evaluates E at the midpoint, zbar is z at the
/// midpoint plus the secant correction along xhat - x.
inline DiscreteGradientPair make_midpoint_discrete_gradient_pair(ScalarFunction H, MatrixFunction E,
                                                                 VectorFunction z,
                                                                 double tau_diag = kDiagonalTol) {
  if (!(tau_diag > 0.0)) {
    throw std::invalid_argument("make_midpoint_discrete_gradient_pair: tau_diag must be positive");
  }
  DiscreteGradientPair out;
  out.H = H;
  out.E = E;
  out.z = z;
  out.Ebar = [E](const Vector& x, const Vector& xhat) { return Matrix(E(0.5 * (x + xhat))); };
  out.zbar = [H = std::move(H), E = std::move(E), z = std::move(z), tau_diag](const Vector& x,
                                                                              const Vector& xhat) {
    if (near_diagonal(x, xhat, tau_diag)) return Vector(z(x));
    const Vector d = xhat - x;
    const Vector mid = 0.5 * (x + xhat);
    const Vector ed = E(mid) * d;
    const double den = d.dot(ed);
    if (!(den > 0.0)) {
      throw SpdViolationError("mass matrix not positive definite at midpoint", x, xhat);
    }
    const Vector zm = z(mid);
    const double correction = (H(xhat) - H(x) - zm.dot(ed)) / den;
    return Vector(zm + correction * d);
  };
  return out;
}

/// Max absolute defects of the pair axioms over a sample set: diagonal
/// consistency of Ebar and zbar (checked at both sample endpoints) and the
/// secant identity on the pair itself.
struct PairAxiomReport {
  double mass_consistency = 0.0;    ///< max |Ebar(x,x) - E(x)|
  double effort_consistency = 0.0;  ///< max |zbar(x,x) - z(x)|
  double secant_defect = 0.0;       ///< max |zbar^T Ebar (xhat-x) - (H(xhat)-H(x))|
};

inline PairAxiomReport verify_pair_axioms(const DiscreteGradientPair& pair,
                                          const std::vector<std::pair<Vector, Vector>>& samples) {
  if (samples.empty()) throw std::invalid_argument("verify_pair_axioms: samples must be nonempty");
  PairAxiomReport rep;
  for (const auto& [x, xhat] : samples) {
    for (const Vector* v : {&x, &xhat}) {
      rep.mass_consistency =
          std::max(rep.mass_consistency, (pair.Ebar(*v, *v) - pair.E(*v)).cwiseAbs().maxCoeff());
      rep.effort_consistency =
          std::max(rep.effort_consistency, (pair.zbar(*v, *v) - pair.z(*v)).lpNorm<Eigen::Infinity>());
    }
    const double lhs = pair.zbar(x, xhat).dot(pair.Ebar(x, xhat) * (xhat - x));
    rep.secant_defect = std::max(rep.secant_defect, std::abs(lhs - (pair.H(xhat) - pair.H(x))));
  }
  return rep;
}

/// Same for a plain discrete gradient: diagonal consistency with gradH and
/// the secant identity.
struct GradientAxiomReport {
  double consistency_defect = 0.0;
  double secant_defect = 0.0;
};

inline GradientAxiomReport verify_gradient_axioms(const DiscreteGradient& dg,
                                                  const std::vector<std::pair<Vector, Vector>>& samples) {
  if (samples.empty()) throw std::invalid_argument("verify_gradient_axioms: samples must be nonempty");
  GradientAxiomReport rep;
  for (const auto& [x, xhat] : samples) {
    for (const Vector* v : {&x, &xhat}) {
      rep.consistency_defect =
          std::max(rep.consistency_defect, (dg.dg(*v, *v) - dg.gradH(*v)).lpNorm<Eigen::Infinity>());
    }
    const double lhs = dg.dg(x, xhat).dot(xhat - x);
    rep.secant_defect = std::max(rep.secant_defect, std::abs(lhs - (dg.H(xhat) - dg.H(x))));
  }
  return rep;
}

}  // namespace phdg
