#pragma once

#include <span>

#include "qflow/manifold.hpp"

namespace qflow {

/// Scalar functionals of a positive conformal factor u against a positive f.
struct EnergyReport {
  double E = 0;            ///< <u, P u>
  double conf_volume = 0;  ///< integral u^{p_crit}
  double f_mass = 0;       ///< integral f u^{p_crit}
  double E_f = 0;          ///< E / f_mass^{(n-4)/n}
  double alpha = 0;        ///< (2/(n-4)) E / f_mass
  double quotient_F = 0;   ///< E / conf_volume^{(n-4)/n}
};

ScalarField apply_P(const DiscreteManifold& man, const ScalarField& u);

/// Satisfies ||P x - rhs||_inf <= 1e-10 ||rhs||_inf up to conditioning.
ScalarField solve_P(const DiscreteManifold& man, const ScalarField& rhs);

/// Throws ManifoldError unless u > 0 and f > 0 at every node.
EnergyReport energy_report(const DiscreteManifold& man, const ScalarField& u,
                           const ScalarField& f);

/// The constraint factor alpha for the current u.
double constraint_alpha(const DiscreteManifold& man, const ScalarField& u, const ScalarField& f);

/// ((n-4)/2) alpha f u^{q_exp}, nodewise.
ScalarField nonlinearity(const DiscreteManifold& man, const ScalarField& u, const ScalarField& f,
                         double alpha);

/// phi = -u + ((n-4)/2) P^{-1}(alpha f u^{q_exp}).
ScalarField velocity_potential(const DiscreteManifold& man, const ScalarField& u,
                               const ScalarField& f, double alpha);

/// F2 = <phi, P phi> for the velocity potential phi.
double f2(const DiscreteManifold& man, const ScalarField& u, const ScalarField& f, double alpha);

/// P u - ((n-4)/2) alpha f u^{q_exp}.
ScalarField equation_residual(const DiscreteManifold& man, const ScalarField& u,
                              const ScalarField& f, double alpha);

/// <w, P w> / (integral |w|^{p_crit})^{(n-4)/n} for nonzero w.
double sobolev_quotient(const DiscreteManifold& man, const ScalarField& w);

/// Minimum quotient over the trials: an upper bound for q(g0).
double quotient_min_estimate(const DiscreteManifold& man, std::span<const ScalarField> trials);

/// Rayleigh quotient of the degree-k zonal harmonic computed from the energy integrand
/// (Delta h)^2 + (a_n R0 + b_pb Ric) |grad h|^2 + ((n-4)/2) Q0 h^2 by quadrature,
/// independently of the stored multipliers. Sphere only; exact for 2k < 2K.
double zonal_energy_quotient(const DiscreteManifold& sphere, int k);

}  // namespace qflow
