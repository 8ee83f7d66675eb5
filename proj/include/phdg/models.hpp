#pragma once

// Bundled test models covering the structural cases the schemes must handle:
// a conservative Hamiltonian system (pendulum), a nonlinear pH system with
// state-dependent SPD mass matrix and non-quadratic Hamiltonian (synthetic),
// and a linear advection-diffusion discretization in pH form (constant SPD
// mass matrix, quadratic Hamiltonian).

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "phdg/structure.hpp"
#include "phdg/system.hpp"

namespace phdg {

using Json = nlohmann::json;

/// A named model: the system bundle plus reference initial condition,
/// default input signal, and the state box used for randomized checks.
struct ModelSpec {
  std::string name;
  Json params;
  PHSystem system;
  Vector x0;
  InputSignal default_input;
  Vector box_lo, box_hi;
};

/// count states drawn uniformly from [lo, hi], reproducible from the seed.
inline std::vector<Vector> sample_states(const Vector& lo, const Vector& hi, int count,
                                         std::uint64_t seed) {
  if (lo.size() != hi.size()) throw std::invalid_argument("sample_states: box bounds disagree");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    Vector x(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) x[i] = lo[i] + (hi[i] - lo[i]) * unit(rng);
    out.push_back(std::move(x));
  }
  return out;
}

/// Planar pendulum as a conservative Hamiltonian system:
/// H(q, p) = p^2/2 + 1 - cos q, constant J = [[0, 1], [-1, 0]], E = I,
/// z = gradH, R = 0, no ports.
inline ModelSpec make_pendulum() {
  ModelSpec model;
  model.name = "pendulum";
  model.params = Json::object();
  PHSystem sys;
  sys.n = 2;
  sys.m = 0;
  sys.E = [](const Vector&) { return Matrix(Matrix::Identity(2, 2)); };
  Matrix j(2, 2);
  j << 0.0, 1.0, -1.0, 0.0;
  sys.J = [j](const Vector&) { return j; };
  sys.R = [](const Vector&) { return Matrix(Matrix::Zero(2, 2)); };
  sys.H = [](const Vector& x) { return 0.5 * x[1] * x[1] + 1.0 - std::cos(x[0]); };
  sys.gradH = [](const Vector& x) {
    Vector g(2);
    g << std::sin(x[0]), x[1];
    return g;
  };
  sys.z = sys.gradH;
  sys.B = [](const Vector&) { return Matrix(2, 0); };
  model.system = sys;
  model.x0 = Vector(2);
  model.x0 << 2.0, 0.0;
  model.default_input = zero_input(0);
  model.box_lo = Vector::Constant(2, -3.0);
  model.box_hi = Vector::Constant(2, 3.0);
  return model;
}

/// Nonlinear pH system with state-dependent SPD mass matrix and
/// non-quadratic Hamiltonian:
///   E(x) = I + alpha * g(x) g(x)^T with g(x) = sin.(x)   (eigenvalues >= 1),
///   H(x) = |x|^2/2 + sum_i cosh(x_i) - n,
///   z(x) solves E(x) z = gradH(x)  (symmetric solve, so E^T z = gradH holds
///   to roundoff), J constant tridiagonal skew, R = delta * I, B = e_1.
inline ModelSpec make_synthetic_nonlinear_ph(int n = 4, double alpha = 0.5, double delta = 0.1) {
  if (n < 2) throw std::invalid_argument("make_synthetic_nonlinear_ph: need n >= 2");
  if (!(alpha > 0.0)) throw std::invalid_argument("make_synthetic_nonlinear_ph: need alpha > 0");
  if (delta < 0.0) throw std::invalid_argument("make_synthetic_nonlinear_ph: need delta >= 0");

  ModelSpec model;
  model.name = "synthetic";
  model.params = Json{{"n", n}, {"alpha", alpha}, {"delta", delta}};

  auto mass = [n, alpha](const Vector& x) {
    const Vector g = x.array().sin().matrix();
    return Matrix(Matrix::Identity(n, n) + alpha * (g * g.transpose()));
  };
  PHSystem sys;
  sys.n = n;
  sys.m = 1;
  sys.E = mass;
  Matrix j = Matrix::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    j(i, i + 1) = 1.0;
    j(i + 1, i) = -1.0;
  }
  sys.J = [j](const Vector&) { return j; };
  sys.R = [n, delta](const Vector&) { return Matrix(delta * Matrix::Identity(n, n)); };
  sys.H = [n](const Vector& x) { return 0.5 * x.squaredNorm() + x.array().cosh().sum() - n; };
  sys.gradH = [](const Vector& x) { return Vector(x + x.array().sinh().matrix()); };
  sys.z = [mass, gradH = sys.gradH](const Vector& x) {
    return Vector(Eigen::LLT<Matrix>(mass(x)).solve(gradH(x)));
  };
  Matrix b = Matrix::Zero(n, 1);
  b(0, 0) = 1.0;
  sys.B = [b](const Vector&) { return b; };
  model.system = sys;

  model.x0 = Vector(n);
  for (int i = 0; i < n; ++i) model.x0[i] = 0.5 * std::pow(-0.8, i);
  model.default_input = [](double t) {
    Vector u(1);
    u[0] = std::sin(2.0 * std::numbers::pi * t);
    return u;
  };
  model.box_lo = Vector::Constant(n, -1.0);
  model.box_hi = Vector::Constant(n, 1.0);
  return model;
}

/// Finite-volume discretization (N cells, centered face values, h = 1/N) of
///   dx/dt = -c dx/dxi + d d2x/dxi2   on (0, 1)
/// with Robin inflow c x - d dx/dxi = c g(t) at xi = 0 and Neumann dx/dxi = 0
/// at xi = 1, assembled in pH form with E = h I, H = (h/2)|x|^2, z = x and
/// B = c e_1. The dissipation matrix has the quadratic form
///   x^T R x = (d/h) sum (x_{i+1} - x_i)^2 + (c/2)(x_1^2 + x_N^2),
/// so R is PSD for c, d >= 0; this is verified at construction.
inline ModelSpec make_advection_diffusion_fd(int N = 32, double c = 1.0, double d = 0.05) {
  if (N < 3) throw std::invalid_argument("make_advection_diffusion_fd: need N >= 3 grid intervals");
  if (d < 0.0) throw std::invalid_argument("make_advection_diffusion_fd: need d >= 0");
  const double h = 1.0 / N;

  // h * xdot = D x + c g(t) e_1, centered interior stencil with the boundary
  // fluxes folded into the first and last rows.
  Matrix op = Matrix::Zero(N, N);
  for (int i = 1; i + 1 < N; ++i) {
    op(i, i - 1) = 0.5 * c + d / h;
    op(i, i) = -2.0 * d / h;
    op(i, i + 1) = -0.5 * c + d / h;
  }
  op(0, 0) = -0.5 * c - d / h;
  op(0, 1) = -0.5 * c + d / h;
  op(N - 1, N - 2) = 0.5 * c + d / h;
  op(N - 1, N - 1) = -(0.5 * c + d / h);

  const Matrix j = 0.5 * (op - op.transpose());
  const Matrix r = -0.5 * (op + op.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(r, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -kDefaultStructureTol) {
    throw std::invalid_argument(
        "make_advection_diffusion_fd: assembled dissipation matrix is not PSD for these parameters");
  }

  ModelSpec model;
  model.name = "advection_diffusion";
  model.params = Json{{"N", N}, {"c", c}, {"d", d}};
  PHSystem sys;
  sys.n = N;
  sys.m = 1;
  sys.E = [N, h](const Vector&) { return Matrix(h * Matrix::Identity(N, N)); };
  sys.J = [j](const Vector&) { return j; };
  sys.R = [r](const Vector&) { return r; };
  sys.H = [h](const Vector& x) { return 0.5 * h * x.squaredNorm(); };
  sys.gradH = [h](const Vector& x) { return Vector(h * x); };
  sys.z = [](const Vector& x) { return x; };
  Matrix b = Matrix::Zero(N, 1);
  b(0, 0) = c;
  sys.B = [b](const Vector&) { return b; };
  model.system = sys;

  model.x0 = Vector::Zero(N);
  model.default_input = [](double t) {
    Vector u(1);
    u[0] = std::sin(2.0 * std::numbers::pi * t);
    return u;
  };
  model.box_lo = Vector::Constant(N, -1.0);
  model.box_hi = Vector::Constant(N, 1.0);
  return model;
}

inline std::vector<std::string> model_names() { return {"pendulum", "synthetic", "advection_diffusion"}; }

namespace detail {

template <typename T>
T param_or(const Json& params, const std::string& key, T fallback) {
  if (!params.contains(key)) return fallback;
  return params.at(key).get<T>();
}

inline void reject_unknown_keys(const Json& params, std::initializer_list<const char*> known) {
  for (const auto& item : params.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || item.key() == k;
    if (!ok) throw std::invalid_argument("unknown model parameter '" + item.key() + "'");
  }
}

}  // namespace detail

/// Builds a bundled model by name, applying JSON parameter overrides.
inline ModelSpec make_model(const std::string& name, const Json& params = Json::object()) {
  if (!params.is_object()) throw std::invalid_argument("make_model: params must be a JSON object");
  if (name == "pendulum") {
    detail::reject_unknown_keys(params, {});
    return make_pendulum();
  }
  if (name == "synthetic") {
    detail::reject_unknown_keys(params, {"n", "alpha", "delta"});
    return make_synthetic_nonlinear_ph(detail::param_or(params, "n", 4),
                                       detail::param_or(params, "alpha", 0.5),
                                       detail::param_or(params, "delta", 0.1));
  }
  if (name == "advection_diffusion") {
    detail::reject_unknown_keys(params, {"N", "c", "d"});
    return make_advection_diffusion_fd(detail::param_or(params, "N", 32),
                                       detail::param_or(params, "c", 1.0),
                                       detail::param_or(params, "d", 0.05));
  }
  std::string known;
  for (const auto& m : model_names()) known += (known.empty() ? "" : ", ") + m;
  throw std::invalid_argument("unknown model '" + name + "' (known: " + known + ")");
}

}  // namespace phdg
