#include "qflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "qflow/errors.hpp"

namespace qflow {
namespace {

void require_positive_state(const ScalarField& u, double t, double dt, const char* where) {
  Eigen::Index node = 0;
  const double lo = u.minCoeff(&node);
  if (!(lo > 0)) {
    std::ostringstream os;
    os << where << ": u lost positivity at node " << node << " (u = " << lo << ", t = " << t
       << "); retry with dt <= " << 0.5 * dt;
    throw PositivityError(os.str(), node, 0.5 * dt);
  }
}

}  // namespace

FlowState make_state(const DiscreteManifold& man, ScalarField u, double t) {
  man.check_compatible(u, "flow state");
  FlowState s;
  s.t = t;
  s.w = man.apply(u);
  s.u = std::move(u);
  return s;
}

double dissipation_potential(double F2) {
  const double x = std::sqrt(std::max(F2, 0.0));
  if (x < 1e-4) {
    // 2 (x - log(1+x)) = x^2 - 2x^3/3 + x^4/2 - ...
    return x * x * (1.0 - x * (2.0 / 3.0 - 0.5 * x));
  }
  return 2.0 * (x - std::log1p(x));
}

PositivityMonitors positivity_monitors(const DiscreteManifold& man, const FlowState& state) {
  const CoeffTable& c = man.coeffs();
  PositivityMonitors m;
  m.min_u = state.u.minCoeff();
  m.min_Pu = state.w.minCoeff();
  m.Q_min = (state.w.array() * state.u.array().pow(-c.q_exp())).minCoeff() / c.half_gap();
  const Background& bg = man.background();
  m.R_proxy_flag = bg.R0 > 0 && bg.Q0 >= 0 && m.Q_min > 0;
  return m;
}

MonitorRecord monitor(const DiscreteManifold& man, const FlowState& state, const ScalarField& f) {
  const EnergyReport er = energy_report(man, state.u, f);
  const ScalarField phi = velocity_potential(man, state.u, f, er.alpha);
  const PositivityMonitors pm = positivity_monitors(man, state);

  MonitorRecord r;
  r.t = state.t;
  r.E = er.E;
  r.E_f = er.E_f;
  r.alpha = er.alpha;
  r.F2 = man.form(phi, phi);
  r.H = dissipation_potential(r.F2);
  r.conf_volume = er.conf_volume;
  r.f_mass = er.f_mass;
  r.min_u = pm.min_u;
  r.max_u = state.u.maxCoeff();
  r.min_Pu = pm.min_Pu;
  r.Q_min = pm.Q_min;
  r.residual_inf = (state.w - nonlinearity(man, state.u, f, er.alpha)).cwiseAbs().maxCoeff();
  r.orthogonality = man.form(state.u, phi) / er.E;
  return r;
}

ScalarField rhs(const DiscreteManifold& man, const FlowState& state, const ScalarField& f) {
  require_positive_state(state.u, state.t, 0.0, "rhs");
  const double alpha = constraint_alpha(man, state.u, f);
  return man.solve(nonlinearity(man, state.u, f, alpha)) - state.u;
}

FlowState step_rk4(const DiscreteManifold& man, const FlowState& state, const ScalarField& f,
                   double dt) {
  if (!(dt > 0)) throw Error("step_rk4: dt must be positive");
  auto velocity = [&](const ScalarField& u, double t) {
    require_positive_state(u, t, dt, "step_rk4 stage");
    const double alpha = constraint_alpha(man, u, f);
    return ScalarField(man.solve(nonlinearity(man, u, f, alpha)) - u);
  };
  const ScalarField& u = state.u;
  const ScalarField k1 = velocity(u, state.t);
  const ScalarField k2 = velocity(u + 0.5 * dt * k1, state.t + 0.5 * dt);
  const ScalarField k3 = velocity(u + 0.5 * dt * k2, state.t + 0.5 * dt);
  const ScalarField k4 = velocity(u + dt * k3, state.t + dt);
  ScalarField next = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  require_positive_state(next, state.t + dt, dt, "step_rk4");
  return make_state(man, std::move(next), state.t + dt);
}

FlowState step_etd(const DiscreteManifold& man, const FlowState& state, const ScalarField& f,
                   double dt) {
  if (!(dt > 0)) throw Error("step_etd: dt must be positive");
  require_positive_state(state.u, state.t, dt, "step_etd");
  const double alpha = constraint_alpha(man, state.u, f);
  const double decay = std::exp(-dt);
  FlowState next;
  next.t = state.t + dt;
  next.w = decay * state.w + (-std::expm1(-dt)) * nonlinearity(man, state.u, f, alpha);
  next.u = man.solve(next.w);
  require_positive_state(next.u, next.t, dt, "step_etd");
  return next;
}

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Converged:
      return "converged";
    case RunStatus::MaxTime:
      return "max-time";
    case RunStatus::PositivityFailure:
      return "positivity-failure";
  }
  return "?";
}

RunResult run(const DiscreteManifold& man, const ScalarField& f, const ScalarField& u0,
              const FlowConfig& cfg) {
  if (!(cfg.dt > 0)) throw Error("run: dt must be positive");
  if (!(cfg.t_max >= 0)) throw Error("run: t_max must be non-negative");
  if (cfg.record_every < 1) throw Error("run: record_every must be >= 1");
  man.check_compatible(u0, "run u0");
  man.check_compatible(f, "run f");
  if (!(f.minCoeff() > 0)) throw Error("run: f must be positive");
  {
    Eigen::Index node = 0;
    const double lo = u0.minCoeff(&node);
    if (!(lo > 0)) {
      std::ostringstream os;
      os << "initial data not positive: u0 = " << lo << " at node " << node;
      throw PositivityError(os.str(), node, cfg.dt);
    }
  }

  RunResult result;
  FlowState state = make_state(man, u0);
  // Roundoff of P u0 scales with the operator norm.
  const double pu_tol = 64 * std::numeric_limits<double>::epsilon() *
                        std::max({1.0, state.w.cwiseAbs().maxCoeff(),
                                  man.operator_norm() * state.u.cwiseAbs().maxCoeff()});
  {
    Eigen::Index node = 0;
    const double lo = state.w.minCoeff(&node);
    if (lo < -pu_tol) {
      std::ostringstream os;
      os << "initial data outside the cone: P u0 = " << lo << " at node " << node;
      throw ConeError(os.str(), node);
    }
    result.report.cone_boundary = lo <= pu_tol;
  }

  const long chunks = std::max<long>(
      1, static_cast<long>(std::ceil(cfg.t_max / (cfg.dt * cfg.record_every) - 1e-9)));
  const long total_steps = chunks * cfg.record_every;

  ConvergenceReport& rep = result.report;
  int streak = 0;
  for (long step = 0;; ++step) {
    if (step % cfg.record_every == 0) {
      MonitorRecord rec = monitor(man, state, f);
      if (cfg.divergence_check && !result.trajectory.empty()) {
        const double slack = cfg.monotone_slack * std::abs(result.trajectory.front().E_f);
        if (rec.E_f > result.trajectory.back().E_f + 10 * slack) {
          std::ostringstream os;
          os << "E_f increased from " << result.trajectory.back().E_f << " to " << rec.E_f
             << " at t = " << rec.t << "; integrator failure";
          throw DivergenceError(os.str());
        }
      }
      const bool small = rec.F2 <= cfg.tol_F2 && rec.residual_inf <= cfg.tol_residual;
      streak = small ? streak + 1 : 0;
      if (streak == 1) rep.t_converged = rec.t;
      result.trajectory.push_back(rec);
      if (streak >= cfg.converge_streak) {
        rep.status = RunStatus::Converged;
        rep.converged = true;
        break;
      }
      if (step >= total_steps) {
        rep.status = RunStatus::MaxTime;
        rep.t_converged = -1;
        break;
      }
    }
    try {
      FlowState next = cfg.integrator == Integrator::RK4 ? step_rk4(man, state, f, cfg.dt)
                                                         : step_etd(man, state, f, cfg.dt);
      next.t = static_cast<double>(step + 1) * cfg.dt;
      state = std::move(next);
    } catch (const PositivityError& e) {
      rep.status = RunStatus::PositivityFailure;
      rep.diagnostic = e.what();
      rep.t_converged = -1;
      break;
    }
  }

  const MonitorRecord& last = result.trajectory.back();
  rep.t_final = last.t;
  rep.F2_final = last.F2;
  rep.residual_inf_final = last.residual_inf;
  rep.alpha_final = last.alpha;
  rep.u_limit = state.u;
  rep.l2_mass = man.weights().dot(state.u.cwiseAbs2());
  if (rep.converged && !(rep.u_limit.minCoeff() > 0)) {
    rep.converged = false;
    rep.status = RunStatus::PositivityFailure;
    rep.diagnostic = "limit is not positive";
  }
  return result;
}

StructuralReport check_structural_identities(std::span<const MonitorRecord> tr, int n) {
  if (tr.size() < 3) throw Error("structural identities need at least 3 records");
  const double h = tr[1].t - tr[0].t;
  if (!(h > 0)) throw Error("structural identities need increasing record times");
  for (std::size_t k = 1; k < tr.size(); ++k) {
    if (std::abs((tr[k].t - tr[k - 1].t) - h) > 1e-9 * h) {
      throw Error("structural identities need a uniform record cadence");
    }
  }
  const double nd = n;
  const double E0 = tr.front().E;
  // Differences below the roundoff floor of the stencil are not resolvable and count as 0.
  const double eps = 64 * std::numeric_limits<double>::epsilon();
  auto normalised = [](double worst, double scale, double floor) {
    if (worst <= floor) return 0.0;
    return worst / std::max(scale, floor);
  };

  StructuralReport rep;
  double worst_a = 0, scale_a = 0, worst_e = 0, scale_e = 0, max_alpha = 0, max_Ef = 0, max_F2 = 0;
  for (const auto& r : tr) {
    max_alpha = std::max(max_alpha, std::abs(r.alpha));
    max_Ef = std::max(max_Ef, std::abs(r.E_f));
    max_F2 = std::max(max_F2, r.F2);
  }
  for (std::size_t k = 1; k + 1 < tr.size(); ++k) {
    const double dalpha = (tr[k + 1].alpha - tr[k - 1].alpha) / (2 * h);
    const double alpha_pred = -(2 * nd / (nd - 4)) * tr[k].alpha / E0 * tr[k].F2;
    worst_a = std::max(worst_a, std::abs(dalpha - alpha_pred));
    scale_a = std::max(scale_a, std::abs(alpha_pred));

    const double dEf = (tr[k + 1].E_f - tr[k - 1].E_f) / (2 * h);
    const double Ef_pred = -2.0 * std::pow(tr[k].f_mass, (4 - nd) / nd) * tr[k].F2;
    worst_e = std::max(worst_e, std::abs(dEf - Ef_pred));
    scale_e = std::max(scale_e, std::abs(Ef_pred));
  }
  rep.alpha_rate_error = normalised(worst_a, scale_a, eps * max_alpha / h);
  rep.energy_rate_error = normalised(worst_e, scale_e, eps * max_Ef / h);

  double trapezoid = 0;
  for (std::size_t k = 0; k + 1 < tr.size(); ++k) trapezoid += 0.5 * h * (tr[k].F2 + tr[k + 1].F2);
  const double predicted =
      (nd - 4) / (2 * nd) * E0 * (std::log(tr.front().alpha) - std::log(tr.back().alpha));
  const double span = tr.back().t - tr.front().t;
  rep.dissipation_integral_error =
      normalised(std::abs(trapezoid - predicted), std::max(std::abs(predicted), std::abs(trapezoid)),
                 eps * ((nd - 4) / (2 * nd) * E0 + span * max_F2));
  return rep;
}

CrosscheckReport modified_flow_crosscheck(const DiscreteManifold& man, const ScalarField& f,
                                          const ScalarField& u0, double T, double dt) {
  if (!(dt > 0) || !(T >= 0)) throw Error("crosscheck: need dt > 0 and T >= 0");
  const CoeffTable& c = man.coeffs();
  const double shrink = 8.0 / (c.n - 4);

  // mu(u) is the constraint factor of the alpha-free flow; in original time
  // the modified solution moves with ds/dt = mu.
  auto mu_of = [&](const ScalarField& v) { return constraint_alpha(man, v, f); };
  struct Aug {
    ScalarField v;
    double s;
  };
  auto velocity = [&](const Aug& a, double t) {
    require_positive_state(a.v, t, dt, "crosscheck stage");
    const double mu = mu_of(a.v);
    ScalarField dv = mu * (man.solve(nonlinearity(man, a.v, f, 1.0)) - a.v);
    return Aug{std::move(dv), mu};
  };

  CrosscheckReport rep;
  FlowState orig = make_state(man, u0);
  Aug mod{u0, 0.0};
  rep.alpha0 = constraint_alpha(man, u0, f);
  rep.mu0 = mu_of(u0);

  auto compare = [&](double t) {
    const ScalarField transported = std::exp(mod.s - t) * mod.v;
    const double dev = (transported - orig.u).cwiseAbs().maxCoeff() / orig.u.cwiseAbs().maxCoeff();
    const double alpha = constraint_alpha(man, orig.u, f);
    const double related = mu_of(mod.v) * std::exp(-shrink * (mod.s - t));
    rep.max_u_deviation = std::max(rep.max_u_deviation, dev);
    rep.max_alpha_relation_error = std::max(rep.max_alpha_relation_error, std::abs(alpha - related) / alpha);
    return dev;
  };

  rep.initial_deviation = compare(0.0);
  const long steps = static_cast<long>(std::llround(T / dt));
  for (long k = 0; k < steps; ++k) {
    const double t = k * dt;
    orig = step_rk4(man, orig, f, dt);
    const Aug k1 = velocity(mod, t);
    const Aug k2 = velocity({mod.v + 0.5 * dt * k1.v, mod.s + 0.5 * dt * k1.s}, t + 0.5 * dt);
    const Aug k3 = velocity({mod.v + 0.5 * dt * k2.v, mod.s + 0.5 * dt * k2.s}, t + 0.5 * dt);
    const Aug k4 = velocity({mod.v + dt * k3.v, mod.s + dt * k3.s}, t + dt);
    mod.v += (dt / 6.0) * (k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v);
    mod.s += (dt / 6.0) * (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s);
    compare((k + 1) * dt);
  }
  rep.s_final = mod.s;
  return rep;
}

ScalarField normalize_alpha(const DiscreteManifold& man, const ScalarField& f,
                            const ScalarField& u0, double target) {
  if (!(target > 0)) throw Error("normalize_alpha: target must be positive");
  const double alpha = constraint_alpha(man, u0, f);
  // alpha(c u) = c^{-8/(n-4)} alpha(u)
  return std::pow(alpha / target, (man.dim() - 4) / 8.0) * u0;
}

void write_trajectory_csv(std::ostream& out, std::span<const MonitorRecord> trajectory) {
  out << "t,E,E_f,alpha,F2,H,conf_volume,f_mass,min_u,max_u,min_Pu,Q_min,residual_inf\n";
  out << std::setprecision(17);
  for (const MonitorRecord& r : trajectory) {
    out << r.t << ',' << r.E << ',' << r.E_f << ',' << r.alpha << ',' << r.F2 << ',' << r.H << ','
        << r.conf_volume << ',' << r.f_mass << ',' << r.min_u << ',' << r.max_u << ','
        << r.min_Pu << ',' << r.Q_min << ',' << r.residual_inf << '\n';
  }
}

void write_report_csv(std::ostream& out, const ConvergenceReport& r) {
  out << "status,converged,t_final,t_converged,F2_final,residual_inf_final,alpha_final,l2_mass,"
         "min_u_limit,cone_boundary\n";
  out << std::setprecision(17);
  out << to_string(r.status) << ',' << (r.converged ? 1 : 0) << ',' << r.t_final << ','
      << r.t_converged << ',' << r.F2_final << ',' << r.residual_inf_final << ','
      << r.alpha_final << ',' << r.l2_mass << ','
      << (r.u_limit.size() ? r.u_limit.minCoeff() : 0.0) << ',' << (r.cone_boundary ? 1 : 0)
      << '\n';
}

}  // namespace qflow
