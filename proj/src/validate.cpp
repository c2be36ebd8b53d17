#include <cmath>
#include <iomanip>
#include <limits>
#include <random>

#include "qflow/cli.hpp"
#include "qflow/errors.hpp"

namespace qflow {
namespace {

class Suite {
 public:
  explicit Suite(std::ostream& out) : out_(out) {}

  void check(const std::string& name, bool pass, double measured, double threshold) {
    all_ &= pass;
    out_ << (pass ? "PASS " : "FAIL ") << name << std::setprecision(4) << std::scientific
         << " measured=" << measured << " threshold=" << threshold << std::defaultfloat << '\n';
  }

  void fail(const std::string& name, const std::string& why) {
    all_ = false;
    out_ << "FAIL " << name << ": " << why << '\n';
  }

  bool all() const { return all_; }

 private:
  std::ostream& out_;
  bool all_ = true;
};

double weighted_norm(const DiscreteManifold& man, const ScalarField& u) {
  return std::sqrt(man.weights().dot(u.cwiseAbs2()));
}

// Max over the trajectory of |E(t) - E(0)| / E(0) for an RK4 run on [0, 1].
double energy_drift(const DiscreteManifold& man, const ScalarField& f, const ScalarField& u0,
                    double dt) {
  FlowState s = make_state(man, u0);
  const double E0 = man.form(s.u, s.u);
  double worst = 0;
  const long steps = std::lround(1.0 / dt);
  for (long k = 0; k < steps; ++k) {
    s = step_rk4(man, s, f, dt);
    worst = std::max(worst, std::abs(man.form(s.u, s.u) - E0) / E0);
  }
  return worst;
}

}  // namespace

int validate(const RunConfig& cfg, std::ostream& out) {
  Suite suite(out);
  std::optional<DiscreteManifold> built;
  try {
    built.emplace(build_manifold(cfg.manifold));
  } catch (const Error& e) {
    const std::string msg = e.what();
    if (msg.find("asymmetric") != std::string::npos) {
      suite.fail("self-adjointness", msg);
    } else if (msg.find("positive definite") != std::string::npos ||
               msg.find("coercive") != std::string::npos) {
      suite.fail("positive-definiteness", msg);
    } else {
      suite.fail("manifold", msg);
    }
    return exit_code::failure;
  }
  const DiscreteManifold& man = *built;
  const Eigen::Index N = man.size();
  const CoeffTable& c = man.coeffs();

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss;
  auto random_field = [&] {
    ScalarField u(N);
    for (Eigen::Index j = 0; j < N; ++j) u[j] = gauss(rng);
    return u;
  };

  {
    double worst_sa = 0;
    double worst_pd = std::numeric_limits<double>::infinity();
    for (int trial = 0; trial < 100; ++trial) {
      const ScalarField u = random_field();
      const ScalarField v = random_field();
      const double nu = weighted_norm(man, u);
      const double nv = weighted_norm(man, v);
      const double lhs = man.weights().dot(man.apply(u).cwiseProduct(v));
      const double rhs = man.weights().dot(u.cwiseProduct(man.apply(v)));
      worst_sa = std::max(worst_sa, std::abs(lhs - rhs) / (nu * nv * std::max(1.0, man.operator_norm())));
      worst_pd = std::min(worst_pd, man.form(u, u) / (nu * nu));
    }
    suite.check("self-adjointness", worst_sa <= 1e-11, worst_sa, 1e-11);
    suite.check("positive-definiteness", worst_pd > 0, worst_pd, 0.0);
  }

  {
    const ScalarField p1 = man.apply(ScalarField::Ones(N));
    const double target = c.half_gap() * man.background().Q0;
    const double err = (p1.array() - target).abs().maxCoeff() / std::max(1.0, std::abs(target));
    suite.check("constant-identity", err <= 1e-12, err, 1e-12);
  }

  {
    const double cond = man.operator_norm() / man.min_eigenvalue();
    const double tol = std::max(1e-10, 100 * std::numeric_limits<double>::epsilon() * cond);
    double worst = 0;
    for (int trial = 0; trial < 10; ++trial) {
      const ScalarField r = random_field();
      const ScalarField x = man.solve(r);
      worst = std::max(worst, (man.apply(x) - r).cwiseAbs().maxCoeff() / r.cwiseAbs().maxCoeff());
    }
    suite.check("round-trip-solve", worst <= tol, worst, tol);
  }

  if (man.kind() == ManifoldKind::SphereAxisym) {
    double worst = 0;
    for (int k = 0; k <= N / 2; ++k) {
      worst = std::max(worst, std::abs(zonal_energy_quotient(man, k) / man.multipliers()[k] - 1));
    }
    suite.check("spectral-multipliers", worst <= 1e-8, worst, 1e-8);
  }

  ScalarField f;
  ScalarField u0;
  try {
    f = build_f(man, cfg.f);
    u0 = ScalarField::Ones(N) + 0.1 * perturbation_mode(man, 1);
  } catch (const Error& e) {
    suite.fail("flow-setup", e.what());
    return exit_code::failure;
  }

  try {
    FlowConfig fc = cfg.flow;
    fc.t_max = 1.0;
    fc.integrator = Integrator::RK4;
    // Every step is recorded so the centered differences resolve fast transients.
    fc.record_every = 1;
    const RunResult res = run(man, f, u0, fc);
    const auto& tr = res.trajectory;

    double ortho = 0;
    double ef_up = 0;
    double alpha_up = 0;
    for (std::size_t k = 0; k < tr.size(); ++k) {
      ortho = std::max(ortho, std::abs(tr[k].orthogonality));
      if (k > 0) {
        ef_up = std::max(ef_up, (tr[k].E_f - tr[k - 1].E_f) / std::abs(tr.front().E_f));
        alpha_up = std::max(alpha_up, (tr[k].alpha - tr[k - 1].alpha) / std::abs(tr.front().alpha));
      }
    }
    suite.check("orthogonality", ortho <= 1e-10, ortho, 1e-10);
    suite.check("monotone-E_f", ef_up <= 1e-10, ef_up, 1e-10);
    suite.check("monotone-alpha", alpha_up <= 1e-10, alpha_up, 1e-10);

    if (tr.size() >= 3 && tr.front().F2 > 1e-16) {
      const StructuralReport sr = check_structural_identities(tr, c.n);
      suite.check("structural-alpha-rate", sr.alpha_rate_error <= 1e-4, sr.alpha_rate_error, 1e-4);
      suite.check("structural-dissipation-integral", sr.dissipation_integral_error <= 1e-4,
                  sr.dissipation_integral_error, 1e-4);
      suite.check("structural-energy-rate", sr.energy_rate_error <= 1e-4, sr.energy_rate_error, 1e-4);
    } else {
      suite.check("structural-identities", true, 0.0, 1e-4);
    }

    const double dts[] = {1.0 / 8, 1.0 / 16, 1.0 / 32};
    double drift[3];
    for (int i = 0; i < 3; ++i) drift[i] = energy_drift(man, f, u0, dts[i]);
    const double roundoff = 1e-13;
    if (drift[0] <= roundoff) {
      suite.check("conservation-order (drift at roundoff)", true, drift[0], roundoff);
    } else {
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (int i = 0; i < 3; ++i) {
        const double x = std::log(dts[i]);
        const double y = std::log(drift[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
      }
      const double slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
      suite.check("conservation-order", std::abs(slope - 4) <= 0.5, slope, 4.0);
    }
  } catch (const Error& e) {
    suite.fail("flow-invariants", e.what());
  }

  out << (suite.all() ? "ALL PASS" : "SOME FAILED") << '\n';
  return suite.all() ? exit_code::ok : exit_code::failure;
}

}  // namespace qflow
