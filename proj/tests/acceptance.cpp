// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qflow/bubble.hpp"
#include "qflow/flow.hpp"

using namespace qflow;

namespace {

constexpr double kBenchmarkL = 4.85;
constexpr int kBenchmarkK = 64;

int failures = 0;
double worst_orthogonality = 0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

void report(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs < budget_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("[%s] %2d %-28s %s runtime=%.2fs (budget %.0fs)%s\n", pass ? "PASS" : "FAIL", id,
              name, o.detail.c_str(), secs, budget_s, in_time ? "" : " OVER BUDGET");
  std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

void track(std::span<const MonitorRecord> traj) {
  for (const auto& r : traj) worst_orthogonality = std::max(worst_orthogonality, std::abs(r.orthogonality));
}

DiscreteManifold benchmark_manifold() {
  return build_einstein_circle_product(einstein_preset("s4xs1"), kBenchmarkL, kBenchmarkK);
}

ScalarField benchmark_u0(const DiscreteManifold& man) {
  const double w = 2 * std::numbers::pi / kBenchmarkL;
  return sample(man, [&](double s) { return 1 + 0.1 * std::cos(w * s); });
}

ScalarField ones(const DiscreteManifold& man) { return ScalarField::Ones(man.size()); }

double max_energy_drift(const DiscreteManifold& man, const ScalarField& f, const ScalarField& u0,
                        double dt) {
  FlowState s = make_state(man, u0);
  const double E0 = man.form(s.u, s.u);
  double worst = 0;
  const long steps = std::lround(1.0 / dt);
  for (long k = 0; k < steps; ++k) {
    s = step_rk4(man, s, f, dt);
    worst = std::max(worst, std::abs(man.form(s.u, s.u) - E0) / E0);
    worst_orthogonality = std::max(worst_orthogonality, std::abs(monitor(man, s, f).orthogonality));
  }
  return worst;
}

FlowConfig converge_config() {
  FlowConfig cfg;
  cfg.dt = 1e-3;
  cfg.t_max = 1000;
  cfg.record_every = 10;
  return cfg;
}

double relative_oscillation(const ScalarField& u) {
  return (u.maxCoeff() - u.minCoeff()) / (u.sum() / u.size());
}

// Q of the metric u^{4/(n-4)} g0, from P u = ((n-4)/2) Q u^{q_exp}.
ScalarField q_curvature(const DiscreteManifold& man, const ScalarField& u) {
  const auto& c = man.coeffs();
  return apply_P(man, u).array() / (c.half_gap() * u.array().pow(c.q_exp()));
}

}  // namespace

int main() {
  const DiscreteManifold bench = benchmark_manifold();
  const ScalarField bench_u0 = benchmark_u0(bench);

  report(1, "operator-correctness", 1, [] {
    const auto S = build_sphere_axisym(5, 64);
    double worst = 0;
    for (Eigen::Index k = 0; k < S.size(); ++k) {
      const int deg = S.mode_index()[k];
      if (deg > 32) continue;
      const double lh = deg * (deg + 4.0);
      const double exact = (lh + 15.0 / 4) * (lh + 7.0 / 4);
      worst = std::max(worst, std::abs(S.multipliers()[k] - exact) / exact);
    }
    const double p1 = (S.apply(ScalarField::Ones(S.size())).array() - 105.0 / 16).abs().maxCoeff();
    return Outcome{worst <= 1e-8 && p1 <= 1e-12,
                   fmt("multiplier_rel=%.2e", worst) + fmt(" P1_err=%.2e", p1)};
  });

  report(3, "conservation", 10, [&] {
    const ScalarField f = ones(bench);
    const double drift_fine = max_energy_drift(bench, f, bench_u0, 1e-3);
    const double dts[3] = {1.0 / 8, 1.0 / 16, 1.0 / 32};
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double dt : dts) {
      const double x = std::log(dt), y = std::log(max_energy_drift(bench, f, bench_u0, dt));
      sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
    return Outcome{drift_fine <= 1e-10 && std::abs(slope - 4) <= 0.5,
                   fmt("drift(1e-3)=%.2e", drift_fine) + fmt(" slope=%.3f", slope)};
  });

  RunResult flat;
  report(4, "monotonicity", 30, [&] {
    flat = run(bench, ones(bench), bench_u0, converge_config());
    track(flat.trajectory);
    double worst_Ef = 0, worst_alpha = 0;
    for (std::size_t i = 1; i < flat.trajectory.size(); ++i) {
      const auto& a = flat.trajectory[i - 1];
      const auto& b = flat.trajectory[i];
      worst_Ef = std::max(worst_Ef, (b.E_f - a.E_f) / a.E_f);
      worst_alpha = std::max(worst_alpha, (b.alpha - a.alpha) / a.alpha);
    }
    const bool ok = flat.report.converged && worst_Ef <= 1e-10 && worst_alpha <= 1e-10;
    return Outcome{ok, fmt("max_rise_Ef=%.2e", worst_Ef) + fmt(" max_rise_alpha=%.2e", worst_alpha) +
                           fmt(" t_final=%.1f", flat.report.t_final)};
  });

  report(5, "structural-identities", 60, [&] {
    StructuralReport rep[2];
    const double dts[2] = {1e-3, 5e-4};
    for (int i = 0; i < 2; ++i) {
      FlowConfig cfg;
      cfg.dt = dts[i];
      cfg.t_max = 1;
      cfg.tol_F2 = 0;
      cfg.tol_residual = 0;
      cfg.record_every = 10;
      const auto res = run(bench, ones(bench), bench_u0, cfg);
      track(res.trajectory);
      rep[i] = check_structural_identities(res.trajectory, bench.dim());
    }
    const double e0[3] = {rep[0].alpha_rate_error, rep[0].dissipation_integral_error,
                          rep[0].energy_rate_error};
    const double e1[3] = {rep[1].alpha_rate_error, rep[1].dissipation_integral_error,
                          rep[1].energy_rate_error};
    bool ok = true;
    std::string detail;
    for (int j = 0; j < 3; ++j) {
      const double ratio = e0[j] / e1[j];
      ok &= e0[j] <= 1e-4 && ratio >= 3 && ratio <= 5;
      detail += fmt(j == 0 ? "err=%.2e" : " err=%.2e", e0[j]) + fmt(" ratio=%.2f", ratio);
    }
    return Outcome{ok, detail};
  });

  report(6, "convergence-certification", 120, [&] {
    const auto& r = flat.report;
    const double osc = relative_oscillation(r.u_limit);
    const double q_err = ((q_curvature(bench, r.u_limit).array() / r.alpha_final) - 1).abs().maxCoeff();

    const double w = 2 * std::numbers::pi / kBenchmarkL;
    const ScalarField f = sample(bench, [&](double s) { return 1 + 0.3 * std::cos(w * s); });
    const auto bump = run(bench, f, bench_u0, converge_config());
    track(bump.trajectory);
    const auto& b = bump.report;
    const double qf_err =
        ((q_curvature(bench, b.u_limit).array() / (b.alpha_final * f.array())) - 1).abs().maxCoeff();

    const bool ok = r.converged && r.F2_final <= 1e-10 && r.residual_inf_final <= 1e-8 &&
                    osc <= 1e-6 && q_err <= 1e-6 && b.converged && b.F2_final <= 1e-10 &&
                    b.residual_inf_final <= 1e-8 && qf_err <= 1e-6 && r.l2_mass > 0 &&
                    b.l2_mass > 0;
    return Outcome{ok, fmt("F2=%.2e", r.F2_final) + fmt(" residual=%.2e", r.residual_inf_final) +
                           fmt(" osc=%.2e", osc) + fmt(" Q/alpha=%.2e", q_err) +
                           fmt(" Q/(alpha f)=%.2e", qf_err) + fmt(" l2_mass=%.4g", r.l2_mass)};
  });

  report(7, "positivity-mechanics", 10, [&] {
    const ScalarField f = ones(bench);
    const double dt = 1e-2;
    FlowState s = make_state(bench, bench_u0);
    double prev = s.w.minCoeff();
    double worst = -INFINITY;
    double min_u = s.u.minCoeff();
    for (int k = 0; k < 100; ++k) {
      s = step_etd(bench, s, f, dt);
      const double cur = s.w.minCoeff();
      worst = std::max(worst, std::exp(-dt) * prev - 1e-12 - cur);
      prev = cur;
      min_u = std::min(min_u, s.u.minCoeff());
    }
    return Outcome{worst <= 0 && min_u > 0,
                   fmt("worst_violation=%.2e", worst) + fmt(" min_u=%.4f", min_u)};
  });

  report(8, "modified-flow-equivalence", 60, [&] {
    const ScalarField f = ones(bench);
    const ScalarField u0 = normalize_alpha(bench, f, bench_u0);
    const auto rep = modified_flow_crosscheck(bench, f, u0, 1.0, 1e-4);
    return Outcome{rep.max_u_deviation <= 1e-6 && rep.max_alpha_relation_error <= 1e-6,
                   fmt("u_dev=%.2e", rep.max_u_deviation) +
                       fmt(" alpha_rel=%.2e", rep.max_alpha_relation_error)};
  });

  report(9, "bubble-asymptotics", 30, [] {
    const auto S = build_sphere_axisym(5, 256);
    const std::vector<double> eps{0.2, 0.1, 0.05};
    const auto rows = sphere_quotient_asymptotic(S, 0.4, eps);
    const double q5 = 105.0 / 16 * std::pow(std::numbers::pi, 12.0 / 5);
    double gap[3];
    for (int i = 0; i < 3; ++i) gap[i] = std::abs(rows[i].value - q5) / q5;
    const bool monotone = gap[0] > gap[1] && gap[1] > gap[2];

    BubbleParams base;
    base.delta = 0.4;
    const auto pw = power_integrals(S, base, eps);
    const double s_crit = loglog_slope(pw.eps, pw.crit, 1);
    const double s_nl = loglog_slope(pw.eps, pw.nonlinear, 1);
    const double s_low = loglog_slope(pw.eps, pw.low, 1);
    const bool slopes = std::abs(s_crit / -5 - 1) <= 0.05 && std::abs(s_nl / -4 - 1) <= 0.05 &&
                        std::abs(s_low / -3 - 1) <= 0.05;
    return Outcome{gap[2] <= 0.02 && monotone && slopes,
                   fmt("gaps=%.3e", gap[0]) + fmt(",%.3e", gap[1]) + fmt(",%.3e", gap[2]) +
                       fmt(" slopes=%.3f", s_crit) + fmt(",%.3f", s_nl) + fmt(",%.3f", s_low)};
  });

  report(10, "green-expansion", 10, [] {
    const auto S = build_sphere_axisym(5, 256);
    const GreenFitOptions opts;
    const auto g = green_mass(S, 0.0, opts);
    const double c5 = 1 / (16 * std::numbers::pi * std::numbers::pi);
    const double rel = std::abs(g.singular_coeff / c5 - 1);
    return Outcome{rel <= 0.1 && g.fit_residual < opts.residual_threshold,
                   fmt("coeff_rel=%.2e", rel) + fmt(" residual=%.2e", g.fit_residual)};
  });

  report(11, "oracle-equivalence", 30, [] {
    const auto mc = oracle::random_matrix_case(20261019);
    const auto man = make_matrix_manifold(mc.n, mc.weights, mc.P);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> unif(-1, 1);
    ScalarField f(6), u0(6);
    for (int j = 0; j < 6; ++j) {
      f[j] = 1 + 0.2 * unif(rng);
      u0[j] = 1 + 0.1 * unif(rng);
    }
    FlowConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 0.5;
    cfg.tol_F2 = 0;
    cfg.tol_residual = 0;
    cfg.record_every = 10;
    const auto res = run(man, f, u0, cfg);
    track(res.trajectory);
    const ScalarField ref = oracle::euler_reference(mc, f, u0, 0.5, 1e-6);
    const double err = (res.report.u_limit - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff();
    const bool at_T = std::abs(res.report.t_final - 0.5) <= 1e-9;
    return Outcome{err <= 1e-4 && at_T,
                   fmt("sup_rel=%.2e", err) + fmt(" t_final=%.6f", res.report.t_final)};
  });

  // Collected from every record of every run above.
  report(2, "constraint-identity", 1, [] {
    return Outcome{worst_orthogonality <= 1e-10, fmt("max_orthogonality=%.2e", worst_orthogonality)};
  });

  std::printf("%s\n", failures == 0 ? "ALL CRITERIA PASS" : "SOME CRITERIA FAILED");
  return failures == 0 ? 0 : 1;
}
