#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "phdg/discrete_gradient.hpp"
#include "phdg/models.hpp"
#include "test_support.hpp"

using namespace phdg;
using Catch::Matchers::WithinAbs;

namespace {

const ScalarFunction quartic_h = [](const Vector& x) { return 0.25 * std::pow(x[0], 4); };
const VectorFunction quartic_grad = [](const Vector& x) {
  return Vector(Vector::Constant(1, std::pow(x[0], 3)));
};

Vector scalar(double v) { return Vector::Constant(1, v); }

}  // namespace

TEST_CASE("midpoint discrete gradient: diagonal branch", "[dg]") {
  Vector x(2);
  x << 0.3, -0.7;
  const ScalarFunction h = [](const Vector& v) { return 0.25 * std::pow(v.squaredNorm(), 2); };
  const VectorFunction grad = [](const Vector& v) { return Vector(v.squaredNorm() * v); };
  CHECK(midpoint_discrete_gradient(h, grad, x, x) == grad(x));
  CHECK_THROWS_AS(midpoint_discrete_gradient(h, grad, x, x, -1.0), std::invalid_argument);
}

TEST_CASE("midpoint discrete gradient: quadratic Hamiltonian reduces to gradient at midpoint", "[dg]") {
  Matrix q(2, 2);
  q << 2.0, 0.5, 0.5, 1.0;
  const ScalarFunction h = [q](const Vector& v) { return 0.5 * v.dot(q * v); };
  const VectorFunction grad = [q](const Vector& v) { return Vector(q * v); };
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Vector x(2), xh(2);
    for (int i = 0; i < 2; ++i) {
      x[i] = unit(rng);
      xh[i] = unit(rng);
    }
    const Vector dg = midpoint_discrete_gradient(h, grad, x, xh);
    CHECK((dg - q * (0.5 * (x + xh))).lpNorm<Eigen::Infinity>() <= 1e-14);
  }
}

TEST_CASE("midpoint discrete gradient: 1D secant oracle", "[dg]") {
  // In one dimension the secant identity forces dg = (H(xh) - H(x)) / (xh - x).
  const Vector dg = midpoint_discrete_gradient(quartic_h, quartic_grad, scalar(0.0), scalar(2.0));
  const double quotient = (quartic_h(scalar(2.0)) - quartic_h(scalar(0.0))) / 2.0;
  CHECK_THAT(quotient, WithinAbs(2.0, 1e-15));
  CHECK_THAT(dg[0], WithinAbs(2.0, 1e-15));

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double a = unit(rng), b = unit(rng);
    if (std::abs(b - a) < 1e-8) continue;
    const Vector g = midpoint_discrete_gradient(quartic_h, quartic_grad, scalar(a), scalar(b));
    const double expect = (quartic_h(scalar(b)) - quartic_h(scalar(a))) / (b - a);
    CHECK_THAT(g[0], WithinAbs(expect, 1e-12 * std::max(1.0, std::abs(expect))));
  }
}

TEST_CASE("midpoint pair: hand-evaluated scalar example", "[dg]") {
  const PHSystem sys = testing::make_scalar_nonlinear();
  const DiscreteGradientPair pair = make_midpoint_discrete_gradient_pair(sys.H, sys.E, sys.z);
  // E(1/2) = 1.25; zbar = z(1/2) + (0.25 - 0.1 * 1.25) / 1.25 = 0.1 + 0.1.
  CHECK_THAT(pair.Ebar(scalar(0.0), scalar(1.0))(0, 0), WithinAbs(1.25, 1e-15));
  const Vector zb = pair.zbar(scalar(0.0), scalar(1.0));
  CHECK_THAT(zb[0], WithinAbs(0.2, 1e-15));
  CHECK_THAT(zb[0] * 1.25 * 1.0, WithinAbs(sys.H(scalar(1.0)) - sys.H(scalar(0.0)), 1e-15));
}

TEST_CASE("midpoint pair: diagonal consistency", "[dg]") {
  const PHSystem sys = testing::make_scalar_nonlinear();
  const DiscreteGradientPair pair = make_midpoint_discrete_gradient_pair(sys.H, sys.E, sys.z);
  const Vector x = scalar(0.4);
  CHECK(pair.Ebar(x, x) == sys.E(x));
  CHECK(pair.zbar(x, x) == sys.z(x));
}

TEST_CASE("midpoint pair: constant mass and quadratic Hamiltonian need no correction", "[dg]") {
  Matrix e(2, 2), q(2, 2);
  e << 2.0, 0.3, 0.3, 1.0;
  q << 1.5, -0.2, -0.2, 0.8;
  const MatrixFunction mass = [e](const Vector&) { return e; };
  const ScalarFunction h = [q](const Vector& v) { return 0.5 * v.dot(q * v); };
  const VectorFunction effort = [e, q](const Vector& v) { return Vector(e.llt().solve(q * v)); };
  const DiscreteGradientPair pair = make_midpoint_discrete_gradient_pair(h, mass, effort);
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Vector x(2), xh(2);
    for (int i = 0; i < 2; ++i) {
      x[i] = unit(rng);
      xh[i] = unit(rng);
    }
    CHECK((pair.zbar(x, xh) - effort(0.5 * (x + xh))).lpNorm<Eigen::Infinity>() <= 1e-13);
  }
}

TEST_CASE("pair axioms verified on randomized samples", "[dg]") {
  SECTION("scalar nonlinear model, wide box") {
    const PHSystem sys = testing::make_scalar_nonlinear();
    const DiscreteGradientPair pair = make_midpoint_discrete_gradient_pair(sys.H, sys.E, sys.z);
    const auto pairs =
        testing::sample_pairs(Vector::Constant(1, -2.0), Vector::Constant(1, 2.0), 1000, 41);
    const PairAxiomReport rep = verify_pair_axioms(pair, pairs);
    CHECK(rep.mass_consistency <= 1e-12);
    CHECK(rep.effort_consistency <= 1e-12);
    CHECK(rep.secant_defect <= 1e-12);
  }
  SECTION("synthetic model") {
    const ModelSpec model = make_synthetic_nonlinear_ph();
    const PHSystem& sys = model.system;
    const DiscreteGradientPair pair = make_midpoint_discrete_gradient_pair(sys.H, sys.E, sys.z);
    const auto pairs = testing::sample_pairs(model.box_lo, model.box_hi, 1000, 43);
    const PairAxiomReport rep = verify_pair_axioms(pair, pairs);
    CHECK(rep.mass_consistency <= 1e-12);
    CHECK(rep.effort_consistency <= 1e-12);
    CHECK(rep.secant_defect <= 1e-12);

    const DiscreteGradient dg = make_midpoint_discrete_gradient(sys.H, sys.gradH);
    const GradientAxiomReport grep = verify_gradient_axioms(dg, pairs);
    CHECK(grep.consistency_defect <= 1e-12);
    CHECK(grep.secant_defect <= 1e-12);
  }
}

TEST_CASE("uncorrected effort breaks the secant identity", "[dg]") {
  const PHSystem sys = testing::make_scalar_nonlinear();
  DiscreteGradientPair broken = make_midpoint_discrete_gradient_pair(sys.H, sys.E, sys.z);
  broken.zbar = [z = sys.z](const Vector& x, const Vector&) { return z(x); };
  const auto pairs = testing::sample_pairs(Vector::Constant(1, -2.0), Vector::Constant(1, 2.0), 200, 47);
  CHECK(verify_pair_axioms(broken, pairs).secant_defect >= 1e-3);
}

TEST_CASE("diagonal samples exercise only the consistency axioms", "[dg]") {
  const PHSystem sys = testing::make_scalar_nonlinear();
  const DiscreteGradientPair pair = make_midpoint_discrete_gradient_pair(sys.H, sys.E, sys.z);
  std::vector<std::pair<Vector, Vector>> diag;
  for (const Vector& x : sample_states(Vector::Constant(1, -2.0), Vector::Constant(1, 2.0), 100, 53)) {
    diag.emplace_back(x, x);
  }
  const PairAxiomReport rep = verify_pair_axioms(pair, diag);
  CHECK(rep.mass_consistency == 0.0);
  CHECK(rep.effort_consistency == 0.0);
  CHECK(rep.secant_defect == 0.0);
}

TEST_CASE("continuity across the diagonal", "[dg]") {
  // Approach the diagonal along a fixed direction: the defect decays like the
  // distance while the analytic term dominates, and the branch takes over for
  // offsets below the diagonal band.
  const ModelSpec model = make_synthetic_nonlinear_ph();
  const PHSystem& sys = model.system;
  const DiscreteGradientPair pair = make_midpoint_discrete_gradient_pair(sys.H, sys.E, sys.z);
  const DiscreteGradient dg = make_midpoint_discrete_gradient(sys.H, sys.gradH);
  std::mt19937_64 rng(59);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vector x(sys.n), dir(sys.n);
  for (int i = 0; i < sys.n; ++i) {
    x[i] = unit(rng);
    dir[i] = unit(rng);
  }
  dir.normalize();

  double prev_pair = -1.0, prev_dg = -1.0;
  for (int k = 2; k <= 22; ++k) {
    const Vector xh = x + std::ldexp(1.0, -k) * dir;
    const double defect_pair = (pair.zbar(x, xh) - sys.z(x)).norm();
    const double defect_dg = (dg.dg(x, xh) - sys.gradH(x)).norm();
    if (k > 6) {
      CHECK(defect_pair <= 0.8 * prev_pair + 1e-13);
      CHECK(defect_dg <= 0.8 * prev_dg + 1e-13);
    }
    prev_pair = defect_pair;
    prev_dg = defect_dg;
  }
  // Far below the band the diagonal branch returns the pointwise values.
  const Vector xh = x + std::ldexp(1.0, -60) * dir;
  CHECK(pair.zbar(x, xh) == sys.z(x));
  CHECK(dg.dg(x, xh) == sys.gradH(x));
}

TEST_CASE("indefinite mass is reported with the offending states", "[dg]") {
  const ScalarFunction h = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  const MatrixFunction bad_mass = [](const Vector&) { return Matrix(-Matrix::Identity(1, 1)); };
  const VectorFunction effort = [](const Vector& x) { return Vector(-x); };
  const DiscreteGradientPair pair = make_midpoint_discrete_gradient_pair(h, bad_mass, effort);
  try {
    (void)pair.zbar(scalar(0.0), scalar(1.0));
    FAIL("expected SpdViolationError");
  } catch (const SpdViolationError& err) {
    CHECK(err.x[0] == 0.0);
    CHECK(err.xhat[0] == 1.0);
  }
}
