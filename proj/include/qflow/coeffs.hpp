#pragma once

namespace qflow {

/// Surface measure of the unit k-sphere S^k.
double sphere_volume(int k);

/// Dimension-dependent constants of the Paneitz operator and of the bubble
/// construction. The operator coefficient b_pb and the bubble constant B_n
/// share a symbol in the literature; here they are kept apart.
struct CoeffTable {
  int n = 5;
  double a_n = 0;      ///< ((n-2)^2+4) / (2(n-1)(n-2)), scalar-curvature coefficient
  double b_pb = 0;     ///< -4/(n-2), Ricci coefficient
  double B_n = 0;      ///< n(n-4)(n^2-4)
  double c_n = 0;      ///< 1/(2(n-2)(n-4) omega_{n-1}), Green function leading coefficient
  double omega = 0;    ///< omega_{n-1}
  int p_num = 0;       ///< p_crit = p_num / (n-4)
  int q_num = 0;       ///< q_exp = q_num / (n-4)

  double p_crit() const { return static_cast<double>(p_num) / (n - 4); }
  double q_exp() const { return static_cast<double>(q_num) / (n - 4); }
  /// (n-4)/2, the factor in front of Q in P and of the nonlinearity in the flow.
  double half_gap() const { return 0.5 * (n - 4); }
};

/// Throws ManifoldError for n < 5.
CoeffTable make_coeffs(int n);

/// Q-curvature of a metric with constant scalar curvature R, |Ric|^2 = ric_sq
/// and vanishing Laplacian of R.
double q_curvature_constant(int n, double R, double ric_sq);

}  // namespace qflow
