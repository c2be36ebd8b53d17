#pragma once

#include <Eigen/Dense>

namespace qflow {

/// Gauss rule in x = cos(theta) for the measure
///   omega_{n-1} (1 - x^2)^{(n-2)/2} dx,
/// i.e. the round S^n restricted to zonal (axisymmetric) functions, together
/// with the zonal harmonics orthonormal in that measure.
struct ZonalRule {
  Eigen::VectorXd x;        ///< nodes, descending (theta ascending)
  Eigen::VectorXd theta;    ///< arccos(x)
  Eigen::VectorXd weights;  ///< Christoffel weights, sum = omega_n
  Eigen::MatrixXd basis;    ///< basis(j, k) = Y_k(x_j), orthonormal zonal harmonic of degree k
};

/// K-point rule; exact for polynomials in x of degree <= 2K-1.
ZonalRule zonal_gauss_rule(int n, int K);

/// Orthonormal zonal harmonics Y_0..Y_{count-1} evaluated at x.
Eigen::VectorXd zonal_harmonics_at(int n, int count, double x);

/// Y_k and its first two x-derivatives at x.
struct ZonalJet {
  double value = 0;
  double d1 = 0;
  double d2 = 0;
};

ZonalJet zonal_harmonic_jet(int n, int k, double x);

}  // namespace qflow
