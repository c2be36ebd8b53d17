#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qflow/manifold.hpp"
#include "qflow/paneitz.hpp"

namespace qflow {

/// Time, conformal factor and the cached Paneitz image w = P u.
struct FlowState {
  double t = 0;
  ScalarField u;
  ScalarField w;
};

FlowState make_state(const DiscreteManifold& man, ScalarField u, double t = 0);

/// One time slice of every tracked quantity.
struct MonitorRecord {
  double t = 0;
  double E = 0;
  double E_f = 0;
  double alpha = 0;
  double F2 = 0;
  double H = 0;
  double conf_volume = 0;
  double f_mass = 0;
  double min_u = 0;
  double max_u = 0;
  double min_Pu = 0;
  double Q_min = 0;
  double residual_inf = 0;
  double orthogonality = 0;  ///< <u, P phi> / E, zero up to roundoff
};

/// H = 2 sqrt(F2) - 2 log(1 + sqrt(F2)), evaluated without cancellation.
double dissipation_potential(double F2);

MonitorRecord monitor(const DiscreteManifold& man, const FlowState& state, const ScalarField& f);

struct PositivityMonitors {
  double min_u = 0;
  double min_Pu = 0;
  double Q_min = 0;
  /// Background sign data (R0 > 0, Q0 >= 0) together with Q_min > 0; a proxy
  /// only, the scalar curvature of the flow metric is not computed.
  bool R_proxy_flag = false;
};

PositivityMonitors positivity_monitors(const DiscreteManifold& man, const FlowState& state);

/// Velocity of the flow: -u + ((n-4)/2) P^{-1}(alpha(u) f u^{q_exp}).
ScalarField rhs(const DiscreteManifold& man, const FlowState& state, const ScalarField& f);

/// Classical RK4 with alpha recomputed at every stage.
FlowState step_rk4(const DiscreteManifold& man, const FlowState& state, const ScalarField& f,
                   double dt);

/// First-order exponential step in w = P u; keeps w >= 0 exactly.
FlowState step_etd(const DiscreteManifold& man, const FlowState& state, const ScalarField& f,
                   double dt);

enum class Integrator { RK4, ETD };

struct FlowConfig {
  Integrator integrator = Integrator::RK4;
  double dt = 1e-3;
  double t_max = 50;
  double tol_F2 = 1e-10;
  double tol_residual = 1e-8;
  int record_every = 10;
  int converge_streak = 3;
  /// Relative slack of the E_f monotonicity check; divergence is declared at 10x.
  double monotone_slack = 1e-10;
  bool divergence_check = true;
};

enum class RunStatus { Converged, MaxTime, PositivityFailure };

const char* to_string(RunStatus status);

struct ConvergenceReport {
  RunStatus status = RunStatus::MaxTime;
  bool converged = false;
  double t_final = 0;       ///< time of the last record
  double t_converged = -1;  ///< first record of the converged streak
  double F2_final = 0;
  double residual_inf_final = 0;
  double alpha_final = 0;
  double l2_mass = 0;       ///< integral u^2 at the end of the run
  bool cone_boundary = false;  ///< P u0 touches zero somewhere
  std::string diagnostic;
  ScalarField u_limit;
};

struct RunResult {
  std::vector<MonitorRecord> trajectory;
  ConvergenceReport report;
};

/// Integrates from u0 until convergence, t_max or loss of positivity.
/// Throws PositivityError / ConeError for u0 outside the cone and
/// DivergenceError if E_f increases beyond 10x the monotonicity slack.
RunResult run(const DiscreteManifold& man, const ScalarField& f, const ScalarField& u0,
              const FlowConfig& cfg);

struct StructuralReport {
  double alpha_rate_error = 0;       ///< centered d(alpha)/dt vs -(2n/(n-4)) alpha F2 / E0
  double dissipation_integral_error = 0;  ///< trapezoid of F2 vs ((n-4)/2n) E0 log(alpha0/alphaT)
  double energy_rate_error = 0;      ///< centered dE_f/dt vs -2 f_mass^{(4-n)/n} F2
};

/// Errors are normalised by the largest magnitude of the predicted quantity
/// over the trajectory. Needs >= 3 records at uniform cadence.
StructuralReport check_structural_identities(std::span<const MonitorRecord> trajectory, int n);

struct CrosscheckReport {
  double max_u_deviation = 0;        ///< sup_t ||e^{s-t} u_mod(s) - u(t)||_inf / ||u(t)||_inf
  double max_alpha_relation_error = 0;  ///< sup_t |alpha - mu e^{-8(s-t)/(n-4)}| / alpha
  double initial_deviation = 0;
  double s_final = 0;
  double mu0 = 0;
  double alpha0 = 0;
};

/// Integrates the original flow and the alpha-free flow in s = int mu dt side
/// by side with RK4 and compares through u = e^{s-t} u_mod(s).
/// With x = s - t one has x' = alpha e^{8x/(n-4)} - 1, so s(t) reaches infinity
/// in finite time when alpha(0) > 1; see normalize_alpha.
CrosscheckReport modified_flow_crosscheck(const DiscreteManifold& man, const ScalarField& f,
                                          const ScalarField& u0, double T, double dt);

/// c u0 with alpha(c u0) = target. The flow commutes with this scaling.
ScalarField normalize_alpha(const DiscreteManifold& man, const ScalarField& f,
                            const ScalarField& u0, double target = 1.0);

void write_trajectory_csv(std::ostream& out, std::span<const MonitorRecord> trajectory);
void write_report_csv(std::ostream& out, const ConvergenceReport& report);

}  // namespace qflow
