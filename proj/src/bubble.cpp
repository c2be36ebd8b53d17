#include "qflow/bubble.hpp"

#include <algorithm>
#include <future>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "qflow/errors.hpp"

namespace qflow {
namespace {

double half_chart(const DiscreteManifold& man) {
  switch (man.kind()) {
    case ManifoldKind::SphereAxisym:
      return std::numbers::pi;
    case ManifoldKind::EinsteinCircleProduct:
      return 0.5 * man.chart_length();
    case ManifoldKind::MatrixLoaded:
      break;
  }
  throw ManifoldError("bubbles need a manifold with a chart");
}

struct LeastSquaresFit {
  Eigen::Vector3d coeffs;
  double residual = 0;
  Eigen::Index used = 0;
};

LeastSquaresFit fit_green(const DiscreteManifold& man, const ScalarField& green, double x0,
                          double r1, double r2) {
  const double power = 4.0 - man.dim();
  std::vector<Eigen::Index> rows;
  for (Eigen::Index j = 0; j < man.size(); ++j) {
    const double d = man.distance(x0, j);
    if (d >= r1 && d <= r2) rows.push_back(j);
  }
  if (rows.size() < 6) throw SolverError("green_mass: fewer than 6 nodes in the fit annulus");
  Eigen::MatrixXd A(rows.size(), 3);
  Eigen::VectorXd b(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double d = man.distance(x0, rows[i]);
    A(i, 0) = std::pow(d, power);
    A(i, 1) = 1.0;
    A(i, 2) = d;
    b[i] = green[rows[i]];
  }
  LeastSquaresFit fit;
  fit.coeffs = A.colPivHouseholderQr().solve(b);
  fit.residual = (A * fit.coeffs - b).norm() / b.norm();
  fit.used = static_cast<Eigen::Index>(rows.size());
  return fit;
}

}  // namespace

double cutoff(double delta, double r) {
  if (r <= delta) return 1.0;
  if (r >= 2 * delta) return 0.0;
  const double s = (r - delta) / delta;
  return 1.0 - s * s * s * (10.0 - s * (15.0 - 6.0 * s));
}

double chart_radius(const DiscreteManifold& man, const BubbleParams& p, Eigen::Index j) {
  const double d = man.distance(p.x0, j);
  if (p.chart == BubbleChart::Geodesic) return d;
  return 2 * std::tan(0.5 * d);
}

void check_bubble_params(const DiscreteManifold& man, const BubbleParams& p) {
  if (!(p.eps > 0)) throw ManifoldError("bubble: eps must be positive");
  if (!(p.eps < p.delta)) throw ManifoldError("bubble: eps must be smaller than delta");
  if (!(2 * p.delta < half_chart(man))) {
    throw ManifoldError("bubble: cutoff support B_{2 delta} does not fit the chart");
  }
  if (man.kind() == ManifoldKind::SphereAxisym && p.x0 != 0.0 && p.x0 != std::numbers::pi) {
    throw ManifoldError("bubble: axisymmetric sphere bubbles concentrate at a pole");
  }
  if (p.chart == BubbleChart::ConformallyFlat && man.kind() != ManifoldKind::SphereAxisym) {
    throw ManifoldError("bubble: the conformally flat chart is available on the sphere only");
  }
}

ScalarField standard_bubble(const DiscreteManifold& man, const BubbleParams& p) {
  check_bubble_params(man, p);
  const double expo = -0.5 * (man.dim() - 4);
  ScalarField u(man.size());
  for (Eigen::Index j = 0; j < man.size(); ++j) {
    const double d = chart_radius(man, p, j);
    const double chi = cutoff(p.delta, d);
    u[j] = chi == 0.0 ? 0.0 : chi * std::pow(p.eps * p.eps + d * d, expo);
  }
  return u;
}

ScalarField bubble_rhs(const DiscreteManifold& man, const BubbleParams& p) {
  check_bubble_params(man, p);
  const double expo = -0.5 * (man.dim() + 4);
  const double scale = man.coeffs().B_n * std::pow(p.eps, 4);
  ScalarField r(man.size());
  for (Eigen::Index j = 0; j < man.size(); ++j) {
    const double d = chart_radius(man, p, j);
    const double chi = cutoff(p.delta, d);
    r[j] = chi == 0.0 ? 0.0 : scale * chi * std::pow(p.eps * p.eps + d * d, expo);
  }
  return r;
}

BubbleFamily corrected_bubble(const DiscreteManifold& man, const BubbleParams& params,
                              const ScalarField& f) {
  BubbleFamily fam;
  fam.params = params;
  fam.u_eps = standard_bubble(man, params);
  fam.rhs = bubble_rhs(man, params);
  if (params.chart == BubbleChart::Geodesic) {
    fam.Pu0 = fam.rhs;
  } else {
    // P~ v = phi^{-q} P(phi v) with phi = cos(theta/2)^{4-n}.
    const double q = man.coeffs().q_exp();
    fam.Pu0 = fam.rhs;
    for (Eigen::Index j = 0; j < man.size(); ++j) {
      if (fam.rhs[j] != 0.0) {
        fam.Pu0[j] *= std::pow(std::cos(0.5 * man.distance(params.x0, j)), (4 - man.dim()) * q);
      }
    }
  }
  fam.u0 = solve_P(man, fam.Pu0);
  if (!fam.u0.allFinite()) throw SolverError("corrected_bubble: solve produced non-finite values");
  fam.u_hat = fam.u0;
  if (params.chart == BubbleChart::ConformallyFlat) {
    for (Eigen::Index j = 0; j < man.size(); ++j) {
      fam.u_hat[j] *= std::pow(std::cos(0.5 * man.distance(params.x0, j)), man.dim() - 4);
    }
  }
  fam.v_eps = fam.u_hat - fam.u_eps;
  fam.min_u_hat = fam.u_hat.minCoeff();
  if (fam.u0.minCoeff() > 0) fam.report = energy_report(man, fam.u0, f);
  return fam;
}

BubbleFamily corrected_bubble(const DiscreteManifold& man, const BubbleParams& params) {
  return corrected_bubble(man, params, ScalarField::Ones(man.size()));
}

double v_eps_bound_coefficient(const DiscreteManifold& man, const BubbleFamily& fam) {
  const int n = man.dim();
  const BubbleParams& p = fam.params;
  double worst = 0;
  for (Eigen::Index j = 0; j < man.size(); ++j) {
    const double d = chart_radius(man, p, j);
    if (d > 2 * p.delta) continue;
    const double rho = p.eps * p.eps + d * d;
    double shape = 1.0;
    if (n == 8) shape = std::max(1.0, std::log(1.0 / rho));
    if (n >= 9) shape = std::pow(rho, 0.5 * (8 - n));
    worst = std::max(worst, std::abs(fam.v_eps[j]) / shape);
  }
  return worst;
}

double sphere_sobolev_constant(int n) {
  const CoeffTable c = make_coeffs(n);
  const double Q = n * (static_cast<double>(n) * n - 4) / 8.0;
  return c.half_gap() * Q * std::pow(sphere_volume(n), 4.0 / n);
}

std::vector<AsymptoticRow> sphere_quotient_asymptotic(const DiscreteManifold& sphere,
                                                      double delta,
                                                      std::span<const double> eps_list) {
  if (sphere.kind() != ManifoldKind::SphereAxisym) {
    throw ManifoldError("sphere_quotient_asymptotic needs the round sphere");
  }
  for (double eps : eps_list) {
    if (!(eps < delta)) {
      std::ostringstream os;
      os << "sphere_quotient_asymptotic: eps = " << eps << " is not below delta = " << delta;
      throw ManifoldError(os.str());
    }
  }
  const CoeffTable& c = sphere.coeffs();
  const double reference = sobolev_quotient(sphere, ScalarField::Ones(sphere.size()));

  std::vector<std::future<AsymptoticRow>> jobs;
  jobs.reserve(eps_list.size());
  for (double eps : eps_list) {
    jobs.push_back(std::async(std::launch::async, [&sphere, &c, delta, eps, reference] {
      const ScalarField u = standard_bubble(sphere, {0.0, eps, delta});
      const double I = integrate(sphere, u.array().pow(c.p_crit()).matrix());
      AsymptoticRow row;
      row.eps = eps;
      row.value = c.B_n * std::pow(eps, 4) * std::pow(I, 4.0 / c.n);
      row.reference = reference;
      row.rel_gap = (row.value - reference) / reference;
      return row;
    }));
  }
  std::vector<AsymptoticRow> rows;
  rows.reserve(jobs.size());
  for (auto& job : jobs) rows.push_back(job.get());
  return rows;
}

PowerIntegrals power_integrals(const DiscreteManifold& man, const BubbleParams& base,
                               std::span<const double> eps_list) {
  const CoeffTable& c = man.coeffs();
  const double low_power = 8.0 / (c.n - 4);
  PowerIntegrals out;
  for (double eps : eps_list) {
    BubbleParams p = base;
    p.eps = eps;
    const Eigen::ArrayXd u = standard_bubble(man, p).array();
    out.eps.push_back(eps);
    out.crit.push_back(integrate(man, u.pow(c.p_crit()).matrix()));
    out.nonlinear.push_back(integrate(man, u.pow(c.q_exp()).matrix()));
    out.low.push_back(integrate(man, u.pow(low_power).matrix()));
  }
  return out;
}

double loglog_slope(std::span<const double> eps, std::span<const double> values, std::size_t i) {
  if (i + 1 >= eps.size() || eps.size() != values.size()) {
    throw Error("loglog_slope: index out of range");
  }
  return std::log(values[i + 1] / values[i]) / std::log(eps[i + 1] / eps[i]);
}

GreenExpansion green_mass(const DiscreteManifold& man, double x0, const GreenFitOptions& opts) {
  if (man.kind() != ManifoldKind::SphereAxisym) {
    throw ManifoldError("green_mass needs a point mass with a radial chart (the round sphere)");
  }
  if (!(0 < opts.r1 && opts.r1 < opts.r2 && 1.1 * opts.r2 < std::numbers::pi)) {
    throw ManifoldError("green_mass: need 0 < r1 < r2 and the widened window inside the chart");
  }
  GreenExpansion g;
  g.x0 = x0;
  g.target_coeff = man.coeffs().c_n;
  g.green = solve_P(man, man.point_mass(x0));

  const LeastSquaresFit fit = fit_green(man, g.green, x0, opts.r1, opts.r2);
  g.singular_coeff = fit.coeffs[0];
  g.mass_beta = fit.coeffs[1] / g.target_coeff;
  g.fit_residual = fit.residual;

  for (double scale : {0.9, 1.1}) {
    const LeastSquaresFit shifted = fit_green(man, g.green, x0, scale * opts.r1, scale * opts.r2);
    g.window_spread = std::max(
        g.window_spread, std::abs(shifted.coeffs[0] - g.singular_coeff) / std::abs(g.singular_coeff));
  }

  g.min_green = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < man.size(); ++j) {
    if (man.distance(x0, j) >= opts.r1) g.min_green = std::min(g.min_green, g.green[j]);
  }

  if (!(g.fit_residual <= opts.residual_threshold)) {
    std::ostringstream os;
    os << "green_mass: fit residual " << g.fit_residual << " above threshold "
       << opts.residual_threshold << " (increase K)";
    throw SolverError(os.str());
  }
  return g;
}

Candidate initial_data_candidate(const DiscreteManifold& man, const ScalarField& f,
                                 const BubbleParams& params, const CandidateOptions& opts) {
  man.check_compatible(f, "initial_data_candidate f");
  if (!(f.minCoeff() > 0)) throw ManifoldError("initial_data_candidate: f must be positive");
  const CoeffTable& c = man.coeffs();

  Candidate out;
  Certificate& cert = out.certificate;
  cert.eps = params.eps;
  std::ostringstream diag;

  const double f_max = f.maxCoeff();
  double f_lo = f_max;
  double f_hi = 0;
  double nearest = std::numeric_limits<double>::infinity();
  Eigen::Index j0 = 0;
  for (Eigen::Index j = 0; j < man.size(); ++j) {
    const double d = chart_radius(man, params, j);
    if (d < nearest) {
      nearest = d;
      j0 = j;
    }
    if (d <= 2 * params.delta) {
      f_lo = std::min(f_lo, f[j]);
      f_hi = std::max(f_hi, f[j]);
    }
  }
  cert.f_oscillation = (f_hi - f_lo) / f_max;
  const bool at_max = f[j0] >= f_max * (1 - opts.flatness_threshold);
  const bool flat_ok =
      c.n == 5 || (opts.vanishing_order_declared && cert.f_oscillation <= opts.flatness_threshold);

  const BubbleFamily fam = corrected_bubble(man, params, f);
  out.u0 = fam.u0;
  cert.min_u0 = fam.u0.minCoeff();
  cert.min_Pu0 = fam.Pu0.minCoeff();
  cert.in_cone = cert.min_u0 > 0 && cert.min_Pu0 >= 0;
  cert.threshold = sphere_sobolev_constant(c.n) / std::pow(f_max, 1.0 - 4.0 / c.n);
  if (fam.report) {
    cert.E_f = fam.report->E_f;
    cert.margin = cert.threshold - cert.E_f;
  } else {
    cert.E_f = std::numeric_limits<double>::quiet_NaN();
    cert.margin = std::numeric_limits<double>::quiet_NaN();
  }

  if (opts.estimate_mass && man.kind() == ManifoldKind::SphereAxisym) {
    try {
      const GreenExpansion g = green_mass(man, params.x0);
      const Eigen::ArrayXd u = fam.u_eps.array();
      cert.beta_correction = -g.mass_beta * integrate(man, u.pow(c.q_exp()).matrix()) /
                             integrate(man, u.pow(c.p_crit()).matrix());
    } catch (const SolverError&) {
    }
  }

  cert.accepted = true;
  if (!at_max) {
    cert.accepted = false;
    diag << "x0 is not a maximum point of f; ";
  }
  if (!flat_ok) {
    cert.accepted = false;
    diag << "f not certified flat on B_2delta (oscillation " << cert.f_oscillation << "); ";
  }
  if (!cert.in_cone) {
    cert.accepted = false;
    diag << "u0 outside the cone (min u0 = " << cert.min_u0 << ", min Pu0 = " << cert.min_Pu0
         << "); ";
  }
  if (!(cert.margin > 0)) {
    cert.accepted = false;
    diag << "energy margin " << cert.margin << " not positive (eps too large or resolution too low); ";
  }
  cert.diagnostic = diag.str();
  if (!cert.diagnostic.empty()) cert.diagnostic.resize(cert.diagnostic.size() - 2);
  return out;
}

void write_asymptotics_csv(std::ostream& out, std::span<const AsymptoticRow> rows) {
  out << "eps,value,reference,rel_gap\n" << std::setprecision(17);
  for (const AsymptoticRow& r : rows) {
    out << r.eps << ',' << r.value << ',' << r.reference << ',' << r.rel_gap << '\n';
  }
}

void write_certificate_csv(std::ostream& out, std::span<const Certificate> certs) {
  out << "eps,E_f,threshold,margin,min_u0,min_Pu0\n" << std::setprecision(17);
  for (const Certificate& c : certs) {
    out << c.eps << ',' << c.E_f << ',' << c.threshold << ',' << c.margin << ',' << c.min_u0
        << ',' << c.min_Pu0 << '\n';
  }
}

}  // namespace qflow
