#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "qflow/paneitz.hpp"

namespace qflow {

/// Quintic smoothstep cutoff: 1 on [0, delta], 0 on [2 delta, inf).
double cutoff(double delta, double r);

/// Geodesic: d is the background distance. ConformallyFlat (sphere only): d = 2 tan(theta/2),
/// the radius of the stereographic metric g~ = phi^{4/(n-4)} g0 with phi = cos(theta/2)^{4-n},
/// which is flat and agrees with g0 to first order at x0.
enum class BubbleChart { Geodesic, ConformallyFlat };

/// Concentration point x0 is a chart coordinate (a pole on the sphere).
struct BubbleParams {
  double x0 = 0;
  double eps = 0.1;
  double delta = 0.4;
  BubbleChart chart = BubbleChart::Geodesic;
};

/// Chart radius of node j.
double chart_radius(const DiscreteManifold& man, const BubbleParams& params, Eigen::Index j);

/// Throws ManifoldError unless 0 < eps < delta and B_{2 delta}(x0) fits the chart.
void check_bubble_params(const DiscreteManifold& man, const BubbleParams& params);

/// chi_delta(d) / (eps^2 + d^2)^{(n-4)/2}.
ScalarField standard_bubble(const DiscreteManifold& man, const BubbleParams& params);

/// B_n eps^4 chi_delta(d) / (eps^2 + d^2)^{(n+4)/2}.
ScalarField bubble_rhs(const DiscreteManifold& man, const BubbleParams& params);

/// Fields u_eps, u_hat, v_eps and rhs live in the bubble chart. u0 is the same
/// conformal factor relative to g0 (u0 = phi u_hat), so P u0 = phi^{q_exp} rhs >= 0.
struct BubbleFamily {
  BubbleParams params;
  ScalarField u_eps;
  ScalarField u_hat;  ///< P~ u_hat = bubble_rhs
  ScalarField v_eps;  ///< u_hat - u_eps
  ScalarField rhs;
  ScalarField u0;
  ScalarField Pu0;
  std::optional<EnergyReport> report;  ///< for u0 against f, present when u0 > 0
  double min_u_hat = 0;
};

BubbleFamily corrected_bubble(const DiscreteManifold& man, const BubbleParams& params,
                              const ScalarField& f);
/// Same with f = 1.
BubbleFamily corrected_bubble(const DiscreteManifold& man, const BubbleParams& params);

/// sup over B_{2 delta} of |v_eps| / shape(r): shape is log(1/(eps^2+r^2)) for n = 8
/// (floored at 1), (eps^2+r^2)^{(8-n)/2} for n >= 9 and 1 below.
double v_eps_bound_coefficient(const DiscreteManifold& man, const BubbleFamily& family);

/// q(S^n) = ((n-4)/2) Q(S^n) vol(S^n)^{4/n}.
double sphere_sobolev_constant(int n);

struct AsymptoticRow {
  double eps = 0;
  double value = 0;      ///< B_n eps^4 (integral u_eps^{p_crit})^{4/n}
  double reference = 0;  ///< q(S^n) from the quotient of the constant function
  double rel_gap = 0;    ///< (value - reference) / reference
};

/// One row per eps, in input order; rows are computed concurrently.
std::vector<AsymptoticRow> sphere_quotient_asymptotic(const DiscreteManifold& sphere,
                                                      double delta,
                                                      std::span<const double> eps_list);

/// Integrals of u_eps^{p_crit}, u_eps^{q_exp} and u_eps^{8/(n-4)} across an eps sweep.
struct PowerIntegrals {
  std::vector<double> eps;
  std::vector<double> crit;
  std::vector<double> nonlinear;
  std::vector<double> low;
};

PowerIntegrals power_integrals(const DiscreteManifold& man, const BubbleParams& base,
                               std::span<const double> eps_list);

/// Log-log slope between entries i and i+1.
double loglog_slope(std::span<const double> eps, std::span<const double> values, std::size_t i);

struct GreenFitOptions {
  double r1 = 0.3;
  double r2 = 0.9;
  double residual_threshold = 1e-3;
};

struct GreenExpansion {
  ScalarField green;
  double singular_coeff = 0;  ///< fitted coefficient of d^{4-n}
  double target_coeff = 0;    ///< c_n
  double mass_beta = 0;       ///< fitted constant term over c_n
  double fit_residual = 0;    ///< rms misfit over rms green on the annulus
  double window_spread = 0;   ///< largest relative change of singular_coeff under +-10% windows
  double min_green = 0;       ///< min of green over nodes outside the annulus inner radius
  double x0 = 0;
};

/// G(x0, .) = P^{-1} delta_{x0}, fitted as a d^{4-n} + b + c d on [r1, r2].
/// Throws SolverError when the fit residual exceeds the threshold.
GreenExpansion green_mass(const DiscreteManifold& man, double x0, const GreenFitOptions& opts = {});

struct CandidateOptions {
  double flatness_threshold = 1e-2;  ///< oscillation of f / max f allowed on B_{2 delta}
  bool vanishing_order_declared = false;
  bool estimate_mass = true;
};

struct Certificate {
  double eps = 0;
  double E_f = 0;
  double threshold = 0;  ///< q(S^n) / (max f)^{(n-4)/n}
  double margin = 0;     ///< threshold - E_f
  double min_u0 = 0;
  double min_Pu0 = 0;
  bool in_cone = false;
  double f_oscillation = 0;
  double beta_correction = std::numeric_limits<double>::quiet_NaN();
  bool accepted = false;
  std::string diagnostic;
};

struct Candidate {
  ScalarField u0;
  Certificate certificate;
};

Candidate initial_data_candidate(const DiscreteManifold& man, const ScalarField& f,
                                 const BubbleParams& params, const CandidateOptions& opts = {});

void write_asymptotics_csv(std::ostream& out, std::span<const AsymptoticRow> rows);
void write_certificate_csv(std::ostream& out, std::span<const Certificate> certs);

}  // namespace qflow
