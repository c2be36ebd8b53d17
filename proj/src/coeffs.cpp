#include "qflow/coeffs.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "qflow/errors.hpp"

namespace qflow {

double sphere_volume(int k) {
  const double half = 0.5 * (k + 1);
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

CoeffTable make_coeffs(int n) {
  if (n < 5) {
    throw ManifoldError("dimension n = " + std::to_string(n) +
                        " unsupported: need n >= 5 so that (n-4)/2 > 0");
  }
  CoeffTable c;
  const double nd = n;
  c.n = n;
  c.a_n = ((nd - 2) * (nd - 2) + 4) / (2 * (nd - 1) * (nd - 2));
  c.b_pb = -4.0 / (nd - 2);
  c.B_n = nd * (nd - 4) * (nd * nd - 4);
  c.omega = sphere_volume(n - 1);
  c.c_n = 1.0 / (2 * (nd - 2) * (nd - 4) * c.omega);
  c.p_num = 2 * n;
  c.q_num = n + 4;
  return c;
}

double q_curvature_constant(int n, double R, double ric_sq) {
  const double nd = n;
  const double r2 = (nd * nd * nd - 4 * nd * nd + 16 * nd - 16) /
                    (8 * (nd - 1) * (nd - 1) * (nd - 2) * (nd - 2));
  return r2 * R * R - 2.0 / ((nd - 2) * (nd - 2)) * ric_sq;
}

}  // namespace qflow
