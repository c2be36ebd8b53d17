#pragma once

// Independent reference computations. Nothing here calls into the spectral
// machinery of the library: the sphere oracle uses the classical Gegenbauer
// recurrence and Simpson quadrature in theta, the flow oracle works on a
// dense matrix with its own LU inverse.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Real = long double;

/// Unnormalized Gegenbauer polynomial C_k^lambda(x).
inline Real gegenbauer(Real lambda, int k, Real x) {
  if (k < 0) return 0;
  Real prev = 1;
  if (k == 0) return prev;
  Real cur = 2 * lambda * x;
  for (int m = 1; m < k; ++m) {
    const Real next = (2 * x * (m + lambda) * cur - (m + 2 * lambda - 1) * prev) / (m + 1);
    prev = cur;
    cur = next;
  }
  return cur;
}

/// Closed-form volume of the unit sphere S^k.
inline Real sphere_volume(int k) {
  return 2 * std::pow(std::numbers::pi_v<Real>, Real(k + 1) / 2) / std::tgamma(Real(k + 1) / 2);
}

/// Rayleigh quotient of the degree-k zonal harmonic on the round S^n, computed
/// from the energy integrand (Delta h)^2 + A |grad h|^2 + c0 h^2 with Simpson's
/// rule in theta. Derivatives use d/dx C_k^l = 2 l C_{k-1}^{l+1}.
inline double sphere_zonal_rayleigh(int n, int k, int panels = 20000) {
  const Real nd = n;
  const Real lambda = (nd - 1) / 2;
  const Real R = nd * (nd - 1);
  const Real ric = nd - 1;
  const Real a_n = ((nd - 2) * (nd - 2) + 4) / (2 * (nd - 1) * (nd - 2));
  const Real b_n = -4 / (nd - 2);
  const Real Q = nd * (nd * nd - 4) / 8;
  const Real A = a_n * R + b_n * ric;
  const Real c0 = (nd - 4) / 2 * Q;
  auto integrand = [&](Real th, Real& energy, Real& mass) {
    const Real x = std::cos(th);
    const Real h = gegenbauer(lambda, k, x);
    const Real h1 = 2 * lambda * gegenbauer(lambda + 1, k - 1, x);
    const Real h2 = 4 * lambda * (lambda + 1) * gegenbauer(lambda + 2, k - 2, x);
    const Real lap = (1 - x * x) * h2 - nd * x * h1;
    const Real grad2 = (1 - x * x) * h1 * h1;
    const Real w = std::pow(std::sin(th), nd - 1);
    energy = w * (lap * lap + A * grad2 + c0 * h * h);
    mass = w * h * h;
  };
  const Real step = std::numbers::pi_v<Real> / panels;
  Real E = 0, M = 0;
  for (int i = 0; i <= panels; ++i) {
    const Real coef = (i == 0 || i == panels) ? 1 : (i % 2 ? 4 : 2);
    Real e, m;
    integrand(i * step, e, m);
    E += coef * e;
    M += coef * m;
  }
  return static_cast<double>(E / M);
}

/// Quotient of cos(kappa s) on a circle of length L through the energy
/// integrand (h'')^2 + A h'^2 + c0 h^2, midpoint rule over whole periods.
inline double circle_mode_rayleigh(double kappa, double A, double c0, double L, int samples = 4096) {
  Real E = 0, M = 0;
  for (int i = 0; i < samples; ++i) {
    const Real s = (i + Real(0.5)) * L / samples;
    const Real h = std::cos(kappa * s);
    const Real h1 = -kappa * std::sin(kappa * s);
    const Real h2 = -kappa * kappa * std::cos(kappa * s);
    E += h2 * h2 + A * h1 * h1 + c0 * h * h;
    M += h * h;
  }
  return static_cast<double>(E / M);
}

/// Random SPD operator on N nodes with positive weights, self-adjoint in the
/// weighted inner product and with P(1) = c0 1.
struct MatrixCase {
  int n = 5;
  Eigen::VectorXd weights;
  Eigen::MatrixXd P;
  double c0 = 0;
};

inline MatrixCase random_matrix_case(unsigned seed, int N = 6, int n = 5) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(0.5, 1.5);
  MatrixCase mc;
  mc.n = n;
  mc.weights.resize(N);
  for (int j = 0; j < N; ++j) mc.weights[j] = unif(rng);

  // W-orthonormal basis whose first vector is constant.
  Eigen::MatrixXd V(N, N);
  V.col(0).setOnes();
  for (int j = 1; j < N; ++j) {
    for (int i = 0; i < N; ++i) V(i, j) = unif(rng) - 1.0;
  }
  auto inner = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return mc.weights.dot(a.cwiseProduct(b));
  };
  for (int j = 0; j < N; ++j) {
    Eigen::VectorXd v = V.col(j);
    for (int i = 0; i < j; ++i) v -= inner(v, V.col(i)) * V.col(i);
    V.col(j) = v / std::sqrt(inner(v, v));
  }
  Eigen::VectorXd lambda(N);
  mc.c0 = 1.0 + unif(rng);
  lambda[0] = mc.c0;
  for (int j = 1; j < N; ++j) lambda[j] = 2.0 + 4.0 * unif(rng);
  mc.P = V * lambda.asDiagonal() * V.transpose() * mc.weights.asDiagonal();
  return mc;
}

/// Explicit Euler on du/dt = -u + ((n-4)/2) P^{-1}(alpha f u^q) with alpha
/// recomputed each step; P^{-1} through a full-pivot LU.
inline Eigen::VectorXd euler_reference(const MatrixCase& mc, const Eigen::VectorXd& f,
                                       Eigen::VectorXd u, double T, double dt) {
  const double nd = mc.n;
  const double p = 2 * nd / (nd - 4);
  const double q = (nd + 4) / (nd - 4);
  const Eigen::MatrixXd Pinv = mc.P.fullPivLu().inverse();
  const long steps = std::lround(T / dt);
  for (long k = 0; k < steps; ++k) {
    const Eigen::VectorXd Pu = mc.P * u;
    const double E = mc.weights.dot(u.cwiseProduct(Pu));
    const double fm = mc.weights.dot(f.cwiseProduct(u.array().pow(p).matrix()));
    const double alpha = 2 / (nd - 4) * E / fm;
    const Eigen::VectorXd src = alpha * f.cwiseProduct(u.array().pow(q).matrix());
    u += dt * (-u + (nd - 4) / 2 * (Pinv * src));
  }
  return u;
}

}  // namespace oracle
