#include "qflow/quadrature.hpp"

#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "qflow/coeffs.hpp"
#include "qflow/errors.hpp"

namespace qflow {
namespace {

// Off-diagonal Jacobi coefficient b_k of the orthonormal Gegenbauer recurrence
//   x Y_k = b_{k+1} Y_{k+1} + b_k Y_{k-1},  lambda = (n-1)/2.
double jacobi_offdiag(double lambda, int k) {
  const double kd = k;
  return std::sqrt(kd * (kd + 2 * lambda - 1) / (4 * (kd + lambda) * (kd + lambda - 1)));
}

struct ValueAndSlope {
  double value;
  double slope;
};

ValueAndSlope top_polynomial(const std::vector<double>& b, double y0, int K, double x) {
  double prev = 0, cur = y0, dprev = 0, dcur = 0;
  for (int k = 0; k < K; ++k) {
    const double back = k > 0 ? b[k] : 0.0;
    const double next = (x * cur - back * prev) / b[k + 1];
    const double dnext = (cur + x * dcur - back * dprev) / b[k + 1];
    prev = cur;
    cur = next;
    dprev = dcur;
    dcur = dnext;
  }
  return {cur, dcur};
}

}  // namespace

Eigen::VectorXd zonal_harmonics_at(int n, int count, double x) {
  const double lambda = 0.5 * (n - 1);
  Eigen::VectorXd y(count);
  if (count == 0) return y;
  y[0] = 1.0 / std::sqrt(sphere_volume(n));
  if (count > 1) y[1] = x * y[0] / jacobi_offdiag(lambda, 1);
  for (int k = 1; k + 1 < count; ++k) {
    y[k + 1] = (x * y[k] - jacobi_offdiag(lambda, k) * y[k - 1]) / jacobi_offdiag(lambda, k + 1);
  }
  return y;
}

ZonalJet zonal_harmonic_jet(int n, int k, double x) {
  const double lambda = 0.5 * (n - 1);
  ZonalJet prev{0, 0, 0};
  ZonalJet cur{1.0 / std::sqrt(sphere_volume(n)), 0, 0};
  for (int m = 0; m < k; ++m) {
    const double back = m > 0 ? jacobi_offdiag(lambda, m) : 0.0;
    const double fwd = jacobi_offdiag(lambda, m + 1);
    const ZonalJet next{(x * cur.value - back * prev.value) / fwd,
                        (cur.value + x * cur.d1 - back * prev.d1) / fwd,
                        (2 * cur.d1 + x * cur.d2 - back * prev.d2) / fwd};
    prev = cur;
    cur = next;
  }
  return cur;
}

ZonalRule zonal_gauss_rule(int n, int K) {
  if (K < 1) throw ManifoldError("zonal rule needs at least one node");
  const double lambda = 0.5 * (n - 1);
  std::vector<double> b(K + 1, 0.0);
  for (int k = 1; k <= K; ++k) b[k] = jacobi_offdiag(lambda, k);

  // Golub-Welsch for initial nodes, then Newton on Y_K.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(K);
  Eigen::VectorXd sub(std::max(K - 1, 0));
  for (int k = 0; k + 1 < K; ++k) sub[k] = b[k + 1];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  Eigen::VectorXd roots = eig.eigenvalues();

  const double y0 = 1.0 / std::sqrt(sphere_volume(n));
  for (int j = 0; j < K; ++j) {
    double x = roots[j];
    for (int it = 0; it < 8; ++it) {
      const auto [value, slope] = top_polynomial(b, y0, K, x);
      const double dx = value / slope;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    roots[j] = x;
  }

  ZonalRule rule;
  rule.x.resize(K);
  rule.theta.resize(K);
  rule.weights.resize(K);
  rule.basis.resize(K, K);
  for (int j = 0; j < K; ++j) {
    // eigenvalues come out ascending in x; store descending so theta ascends
    const double x = roots[K - 1 - j];
    rule.x[j] = x;
    rule.theta[j] = std::acos(x);
    const Eigen::VectorXd y = zonal_harmonics_at(n, K, x);
    rule.basis.row(j) = y.transpose();
    rule.weights[j] = 1.0 / y.squaredNorm();
  }
  return rule;
}

}  // namespace qflow
