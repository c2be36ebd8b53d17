#include "qflow/paneitz.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "qflow/errors.hpp"
#include "qflow/quadrature.hpp"

namespace qflow {
namespace {

void require_positive(const ScalarField& v, const char* name) {
  Eigen::Index where = 0;
  const double lo = v.minCoeff(&where);
  if (!(lo > 0)) {
    std::ostringstream os;
    os << name << " must be positive: value " << lo << " at node " << where;
    throw ManifoldError(os.str());
  }
}

}  // namespace

ScalarField apply_P(const DiscreteManifold& man, const ScalarField& u) { return man.apply(u); }

ScalarField solve_P(const DiscreteManifold& man, const ScalarField& rhs) { return man.solve(rhs); }

EnergyReport energy_report(const DiscreteManifold& man, const ScalarField& u,
                           const ScalarField& f) {
  man.check_compatible(u, "energy_report u");
  man.check_compatible(f, "energy_report f");
  require_positive(u, "u");
  require_positive(f, "f");
  const CoeffTable& c = man.coeffs();
  const double ratio = static_cast<double>(c.n - 4) / c.n;
  const Eigen::ArrayXd up = u.array().pow(c.p_crit());

  EnergyReport r;
  r.E = man.form(u, u);
  r.conf_volume = man.weights().dot(up.matrix());
  r.f_mass = man.weights().dot((f.array() * up).matrix());
  r.E_f = r.E / std::pow(r.f_mass, ratio);
  r.alpha = r.E / (c.half_gap() * r.f_mass);
  r.quotient_F = r.E / std::pow(r.conf_volume, ratio);
  return r;
}

double constraint_alpha(const DiscreteManifold& man, const ScalarField& u, const ScalarField& f) {
  const CoeffTable& c = man.coeffs();
  const double f_mass = man.weights().dot((f.array() * u.array().pow(c.p_crit())).matrix());
  return man.form(u, u) / (c.half_gap() * f_mass);
}

ScalarField nonlinearity(const DiscreteManifold& man, const ScalarField& u, const ScalarField& f,
                         double alpha) {
  const CoeffTable& c = man.coeffs();
  return (c.half_gap() * alpha) * (f.array() * u.array().pow(c.q_exp())).matrix();
}

ScalarField velocity_potential(const DiscreteManifold& man, const ScalarField& u,
                               const ScalarField& f, double alpha) {
  man.check_compatible(u, "velocity_potential u");
  man.check_compatible(f, "velocity_potential f");
  require_positive(u, "u");
  if (!(alpha > 0)) throw ManifoldError("alpha must be positive");
  return man.solve(nonlinearity(man, u, f, alpha)) - u;
}

double f2(const DiscreteManifold& man, const ScalarField& u, const ScalarField& f, double alpha) {
  const ScalarField phi = velocity_potential(man, u, f, alpha);
  return man.form(phi, phi);
}

ScalarField equation_residual(const DiscreteManifold& man, const ScalarField& u,
                              const ScalarField& f, double alpha) {
  return man.apply(u) - nonlinearity(man, u, f, alpha);
}

double sobolev_quotient(const DiscreteManifold& man, const ScalarField& w) {
  man.check_compatible(w, "sobolev_quotient");
  const CoeffTable& c = man.coeffs();
  const double vol = man.weights().dot(w.array().abs().pow(c.p_crit()).matrix());
  if (!(vol > 0)) throw ManifoldError("quotient of the zero field");
  return man.form(w, w) / std::pow(vol, static_cast<double>(c.n - 4) / c.n);
}

double quotient_min_estimate(const DiscreteManifold& man, std::span<const ScalarField> trials) {
  if (trials.empty()) throw ManifoldError("quotient_min_estimate needs at least one trial");
  double best = std::numeric_limits<double>::infinity();
  for (const ScalarField& w : trials) best = std::min(best, sobolev_quotient(man, w));
  return best;
}

double zonal_energy_quotient(const DiscreteManifold& sphere, int k) {
  if (sphere.kind() != ManifoldKind::SphereAxisym) {
    throw ManifoldError("zonal_energy_quotient needs the axisymmetric sphere");
  }
  if (k < 0 || k >= sphere.size()) throw ManifoldError("zonal degree out of range");
  const CoeffTable& c = sphere.coeffs();
  const Background& bg = sphere.background();
  const double A = c.a_n * bg.R0 + c.b_pb * bg.Ric_dir;
  const double c0 = c.half_gap() * bg.Q0;
  const int n = c.n;
  double energy = 0;
  double mass = 0;
  for (Eigen::Index j = 0; j < sphere.size(); ++j) {
    const double x = std::cos(sphere.coordinates()[j]);
    const ZonalJet h = zonal_harmonic_jet(n, k, x);
    const double lap = (1 - x * x) * h.d2 - n * x * h.d1;
    const double grad_sq = (1 - x * x) * h.d1 * h.d1;
    const double w = sphere.weights()[j];
    energy += w * (lap * lap + A * grad_sq + c0 * h.value * h.value);
    mass += w * h.value * h.value;
  }
  return energy / mass;
}

}  // namespace qflow
