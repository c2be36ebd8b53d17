#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qflow/cli.hpp"
#include "qflow/errors.hpp"

namespace qflow {
namespace {

std::ofstream open_output(const std::filesystem::path& dir, const char* name) {
  std::ofstream out(dir / name);
  if (!out) throw Error("cannot write " + (dir / name).string());
  return out;
}

int run_flow(const RunConfig& cfg, const DiscreteManifold& man, const ScalarField& f,
             const ScalarField& u0, std::ostream& out, std::ostream& err) {
  RunResult result;
  try {
    result = run(man, f, u0, cfg.flow);
  } catch (const PositivityError& e) {
    err << "positivity failure: " << e.what() << '\n';
    return exit_code::positivity;
  } catch (const ConeError& e) {
    err << "positivity failure: " << e.what() << '\n';
    return exit_code::positivity;
  } catch (const DivergenceError& e) {
    err << "divergence: " << e.what() << '\n';
    return exit_code::failure;
  }
  const auto dir = output_directory(cfg);
  std::filesystem::create_directories(dir);
  {
    auto traj = open_output(dir, "trajectory.csv");
    write_trajectory_csv(traj, result.trajectory);
    auto rep = open_output(dir, "report.csv");
    write_report_csv(rep, result.report);
  }
  const ConvergenceReport& r = result.report;
  out << "converged=" << (r.converged ? "yes" : "no") << " status=" << to_string(r.status)
      << std::setprecision(6) << " t_final=" << r.t_final << " F2=" << r.F2_final
      << " residual=" << r.residual_inf_final << " alpha=" << r.alpha_final << '\n';
  if (r.status == RunStatus::PositivityFailure) {
    err << r.diagnostic << '\n';
    return exit_code::positivity;
  }
  return r.converged ? exit_code::ok : exit_code::not_converged;
}

int run_sweep(const RunConfig& cfg, const DiscreteManifold& man, const ScalarField& f,
              std::ostream& out) {
  const auto dir = output_directory(cfg);
  std::filesystem::create_directories(dir);
  if (man.kind() == ManifoldKind::SphereAxisym) {
    const auto rows = sphere_quotient_asymptotic(man, cfg.sweep_delta, cfg.sweep_eps);
    auto csv = open_output(dir, "asymptotics.csv");
    write_asymptotics_csv(csv, rows);
    for (const AsymptoticRow& r : rows) {
      out << std::setprecision(6) << "eps=" << r.eps << " value=" << r.value
          << " reference=" << r.reference << " rel_gap=" << r.rel_gap << '\n';
    }
  }
  std::vector<Certificate> certs;
  for (double eps : cfg.sweep_eps) {
    BubbleParams p = cfg.u0.bubble;
    p.eps = eps;
    p.delta = cfg.sweep_delta;
    certs.push_back(initial_data_candidate(man, f, p).certificate);
    const Certificate& c = certs.back();
    out << std::setprecision(6) << "eps=" << eps << " E_f=" << c.E_f
        << " threshold=" << c.threshold << " margin=" << c.margin
        << " accepted=" << (c.accepted ? "yes" : "no") << '\n';
  }
  auto csv = open_output(dir, "certificates.csv");
  write_certificate_csv(csv, certs);
  return exit_code::ok;
}

int run_crosscheck(const RunConfig& cfg, const DiscreteManifold& man, const ScalarField& f,
                   const ScalarField& u0, std::ostream& out, std::ostream& err) {
  CrosscheckReport rep;
  try {
    const ScalarField start = cfg.crosscheck_normalize ? normalize_alpha(man, f, u0) : u0;
    rep = modified_flow_crosscheck(man, f, start, cfg.crosscheck_T, cfg.crosscheck_dt);
  } catch (const PositivityError& e) {
    err << "positivity failure: " << e.what() << '\n';
    return exit_code::positivity;
  }
  const auto dir = output_directory(cfg);
  std::filesystem::create_directories(dir);
  auto csv = open_output(dir, "report.csv");
  csv << "max_u_deviation,max_alpha_relation_error,initial_deviation,s_final,mu0,alpha0\n"
      << std::setprecision(17) << rep.max_u_deviation << ',' << rep.max_alpha_relation_error
      << ',' << rep.initial_deviation << ',' << rep.s_final << ',' << rep.mu0 << ','
      << rep.alpha0 << '\n';
  const bool ok = rep.max_u_deviation <= 1e-6 && rep.max_alpha_relation_error <= 1e-6;
  out << std::setprecision(6) << "crosscheck " << (ok ? "PASS" : "FAIL")
      << " max_u_deviation=" << rep.max_u_deviation
      << " alpha_relation=" << rep.max_alpha_relation_error << " s_final=" << rep.s_final
      << '\n';
  return ok ? exit_code::ok : exit_code::failure;
}

}  // namespace

DiscreteManifold build_manifold(const ManifoldSpec& spec) {
  if (spec.kind == "sphere") return build_sphere_axisym(spec.n, spec.K);
  if (spec.kind == "product") {
    const double L = spec.L > 0 ? spec.L : 2 * std::numbers::pi;
    return build_einstein_circle_product(einstein_preset(spec.preset), L, spec.K);
  }
  if (spec.kind == "matrix") return load_matrix_manifold(spec.file);
  throw ConfigError("unknown manifold kind '" + spec.kind + "'");
}

ScalarField read_field_file(const std::filesystem::path& path, Eigen::Index expected) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read field file " + path.string());
  std::vector<double> values;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream words(line);
    for (std::string w; words >> w;) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(w, &used));
        if (used != w.size()) throw std::invalid_argument(w);
      } catch (const std::exception&) {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": not a number '" + w +
                          "'");
      }
    }
  }
  if (static_cast<Eigen::Index>(values.size()) != expected) {
    std::ostringstream os;
    os << path.string() << ": expected " << expected << " values, found " << values.size();
    throw ConfigError(os.str());
  }
  return Eigen::Map<const ScalarField>(values.data(), expected);
}

ScalarField perturbation_mode(const DiscreteManifold& man, int index) {
  if (index < 1) throw ConfigError("perturbation mode index must be at least 1");
  ScalarField mode;
  if (man.is_spectral()) {
    for (Eigen::Index k = 0; k < man.size(); ++k) {
      if (man.mode_index()[k] == index) {
        mode = man.basis().col(k);
        break;
      }
    }
    if (mode.size() == 0) throw ConfigError("perturbation mode is not resolved by the grid");
  } else {
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(
        man.form_matrix(), Eigen::MatrixXd(man.weights().asDiagonal()));
    const ScalarField ones = ScalarField::Ones(man.size());
    const double ones_norm = std::sqrt(man.weights().sum());
    int seen = 0;
    for (Eigen::Index k = 0; k < man.size(); ++k) {
      const ScalarField v = ges.eigenvectors().col(k);
      const double vnorm = std::sqrt(man.weights().dot(v.cwiseAbs2()));
      const double overlap = std::abs(man.weights().dot(v)) / (vnorm * ones_norm);
      if (overlap > 1 - 1e-8) continue;
      if (++seen == index) {
        mode = v;
        break;
      }
    }
    if (mode.size() == 0) throw ConfigError("matrix manifold has too few nonconstant modes");
  }
  Eigen::Index at = 0;
  mode.cwiseAbs().maxCoeff(&at);
  return mode / mode[at];
}

ScalarField build_f(const DiscreteManifold& man, const FSpec& spec) {
  ScalarField f;
  if (spec.profile == "const") {
    f = ScalarField::Constant(man.size(), spec.c);
  } else if (spec.profile == "cosine-bump") {
    if (man.kind() != ManifoldKind::EinsteinCircleProduct) {
      throw ConfigError("f = cosine-bump needs a product manifold");
    }
    const double w = 2 * std::numbers::pi * spec.k / man.chart_length();
    f = sample(man, [&](double s) { return 1 + spec.a * std::cos(w * s); });
  } else if (spec.profile == "polar-bump") {
    if (man.kind() != ManifoldKind::SphereAxisym) {
      throw ConfigError("f = polar-bump needs the sphere");
    }
    f = sample(man, [&](double th) { return 1 + spec.a * std::pow(std::cos(th), spec.m); });
  } else if (spec.profile == "file") {
    f = read_field_file(spec.file, man.size());
  } else {
    throw ConfigError("unknown f profile '" + spec.profile + "'");
  }
  if (!(f.minCoeff() > 0)) throw ConfigError("f must be positive at every node");
  return f;
}

ScalarField build_u0(const DiscreteManifold& man, const InitSpec& spec) {
  if (spec.type == "constant") return ScalarField::Constant(man.size(), spec.value);
  if (spec.type == "perturbed") {
    return spec.value * (ScalarField::Ones(man.size()) + spec.amplitude * perturbation_mode(man, spec.mode));
  }
  if (spec.type == "bubble") return corrected_bubble(man, spec.bubble).u0;
  if (spec.type == "file") return read_field_file(spec.file, man.size());
  throw ConfigError("unknown u0 type '" + spec.type + "'");
}

std::filesystem::path output_directory(const RunConfig& cfg) {
  if (const char* env = std::getenv("QFLOW_OUT"); env && *env) return env;
  return cfg.output_dir;
}

int execute(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.scenario == Scenario::Validate) return validate(cfg, out);
  if ((cfg.scenario == Scenario::Flow || cfg.scenario == Scenario::Crosscheck) &&
      cfg.u0.type.empty()) {
    err << "config error: scenario " << to_string(cfg.scenario) << " needs 'u0'\n";
    return exit_code::config;
  }
  std::optional<DiscreteManifold> man;
  ScalarField f;
  ScalarField u0;
  try {
    man.emplace(build_manifold(cfg.manifold));
    f = build_f(*man, cfg.f);
    if (!cfg.u0.type.empty() && cfg.scenario != Scenario::BubbleSweep) u0 = build_u0(*man, cfg.u0);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_code::config;
  } catch (const ManifoldError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_code::config;
  }

  try {
    switch (cfg.scenario) {
      case Scenario::Flow:
        return run_flow(cfg, *man, f, u0, out, err);
      case Scenario::BubbleSweep:
        return run_sweep(cfg, *man, f, out);
      case Scenario::Crosscheck:
        return run_crosscheck(cfg, *man, f, u0, out, err);
      case Scenario::Validate:
        break;
    }
  } catch (const ManifoldError& e) {
    err << "config error: " << e.what() << '\n';
    return exit_code::config;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::failure;
  }
  return exit_code::failure;
}

}  // namespace qflow
