#include "qflow/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <regex>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "qflow/errors.hpp"
#include "qflow/quadrature.hpp"

namespace qflow {

const char* to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::SphereAxisym:
      return "sphere-axisym";
    case ManifoldKind::EinsteinCircleProduct:
      return "einstein-circle-product";
    case ManifoldKind::MatrixLoaded:
      return "matrix";
  }
  return "?";
}

EinsteinPreset einstein_preset(const std::string& name) {
  static const std::regex pattern(R"(s(\d+)xs1)");
  std::smatch match;
  if (!std::regex_match(name, match, pattern)) {
    throw ManifoldError("unknown Einstein preset '" + name + "' (expected s{m}xs1)");
  }
  const int m = std::stoi(match[1]);
  EinsteinPreset p;
  p.name = name;
  p.n = m + 1;
  if (p.n < 5) throw ManifoldError("preset " + name + " has dimension below 5");
  // Unit S^m: Ric = (m-1) g on m directions, flat along the circle.
  p.R0 = m * (m - 1.0);
  p.Ric_dir = 0.0;
  p.Q0 = q_curvature_constant(p.n, p.R0, m * (m - 1.0) * (m - 1.0));
  p.cross_volume = sphere_volume(m);
  return p;
}

namespace {

double periodic_distance(double a, double b, double L) {
  double d = std::fmod(std::abs(a - b), L);
  return std::min(d, L - d);
}

// Values of the W-orthonormal Fourier basis at arclength s.
Eigen::VectorXd circle_basis_row(double s, double L, int K, double volume) {
  Eigen::VectorXd row(K);
  const double w = 2 * std::numbers::pi / L;
  row[0] = 1.0 / std::sqrt(volume);
  int col = 1;
  for (int m = 1; col < K; ++m) {
    const bool nyquist = (K % 2 == 0) && (2 * m == K);
    if (nyquist) {
      row[col++] = std::cos(m * w * s) / std::sqrt(volume);
    } else {
      row[col++] = std::sqrt(2.0 / volume) * std::cos(m * w * s);
      if (col < K) row[col++] = std::sqrt(2.0 / volume) * std::sin(m * w * s);
    }
  }
  return row;
}

}  // namespace

double DiscreteManifold::distance(double x0, Eigen::Index j) const {
  switch (kind_) {
    case ManifoldKind::SphereAxisym:
      return std::abs(coords_[j] - x0);
    case ManifoldKind::EinsteinCircleProduct:
      return periodic_distance(coords_[j], x0, chart_length_);
    case ManifoldKind::MatrixLoaded:
      break;
  }
  throw ManifoldError("matrix manifolds carry no chart distance");
}

void DiscreteManifold::check_compatible(const ScalarField& u, const char* what) const {
  if (u.size() != size()) {
    std::ostringstream os;
    os << what << ": field has " << u.size() << " entries, manifold has " << size()
       << " nodes";
    throw ManifoldError(os.str());
  }
}

Eigen::VectorXd DiscreteManifold::coefficients(const ScalarField& u) const {
  return basis_.transpose() * weights_.cwiseProduct(u);
}

ScalarField DiscreteManifold::apply(const ScalarField& u) const {
  check_compatible(u, "apply_P");
  if (!is_spectral()) return op_ * u;
  const double mean = weights_.dot(u) / volume_;
  Eigen::VectorXd c = coefficients(u.array() - mean);
  c[0] = 0.0;
  c.array() *= multipliers_.array();
  ScalarField out = basis_ * c;
  out.array() += multipliers_[0] * mean;
  return out;
}

ScalarField DiscreteManifold::solve(const ScalarField& rhs) const {
  check_compatible(rhs, "solve_P");
  if (!is_spectral()) {
    ScalarField x = chol_.solve(weights_.cwiseProduct(rhs));
    return x;
  }
  const double mean = weights_.dot(rhs) / volume_;
  Eigen::VectorXd c = coefficients(rhs.array() - mean);
  c[0] = 0.0;
  c.array() /= multipliers_.array();
  ScalarField out = basis_ * c;
  out.array() += mean / multipliers_[0];
  return out;
}

double DiscreteManifold::form(const ScalarField& u, const ScalarField& v) const {
  check_compatible(u, "form");
  check_compatible(v, "form");
  if (!is_spectral()) return u.dot(form_ * v);
  const double mu = weights_.dot(u) / volume_;
  const double mv = weights_.dot(v) / volume_;
  Eigen::VectorXd cu = coefficients(u.array() - mu);
  Eigen::VectorXd cv = coefficients(v.array() - mv);
  cu[0] = 0.0;
  cv[0] = 0.0;
  return multipliers_[0] * mu * mv * volume_ +
         (cu.array() * cv.array() * multipliers_.array()).sum();
}

ScalarField DiscreteManifold::point_mass(double x0) const {
  const auto K = static_cast<int>(size());
  Eigen::VectorXd at;
  switch (kind_) {
    case ManifoldKind::SphereAxisym:
      if (std::abs(x0) > 1e-14 && std::abs(x0 - std::numbers::pi) > 1e-14) {
        throw ManifoldError("axisymmetric sphere supports point masses only at the poles");
      }
      at = zonal_harmonics_at(dim(), K, std::cos(x0));
      break;
    case ManifoldKind::EinsteinCircleProduct:
      at = circle_basis_row(x0, chart_length_, K, volume_);
      break;
    case ManifoldKind::MatrixLoaded:
      throw ManifoldError("matrix manifolds support point masses only at nodes");
  }
  return basis_ * at;
}

ScalarField DiscreteManifold::point_mass_at_node(Eigen::Index j) const {
  if (j < 0 || j >= size()) throw ManifoldError("point mass node out of range");
  ScalarField d = ScalarField::Zero(size());
  d[j] = 1.0 / weights_[j];
  return d;
}

DiscreteManifold build_sphere_axisym(int n, int K) {
  if (K < 4) throw ManifoldError("sphere needs K >= 4 nodes");
  DiscreteManifold man;
  man.coeffs_ = make_coeffs(n);
  man.kind_ = ManifoldKind::SphereAxisym;
  const ZonalRule rule = zonal_gauss_rule(n, K);
  man.weights_ = rule.weights;
  man.volume_ = sphere_volume(n);
  man.coords_ = rule.theta;
  man.chart_length_ = std::numbers::pi;
  man.basis_ = rule.basis;

  const double nd = n;
  man.background_.R0 = nd * (nd - 1);
  man.background_.Ric_dir = nd - 1;
  man.background_.Q0 = nd * (nd * nd - 4) / 8;

  man.multipliers_.resize(K);
  man.mode_index_.resize(K);
  const double shift1 = nd * (nd - 2) / 4;
  const double shift2 = (nd - 4) * (nd + 2) / 4;
  for (int k = 0; k < K; ++k) {
    const double lap = static_cast<double>(k) * (k + nd - 1);
    man.multipliers_[k] = (lap + shift1) * (lap + shift2);
    man.mode_index_[k] = k;
  }
  man.op_norm_ = man.multipliers_.maxCoeff();
  man.op_min_ = man.multipliers_.minCoeff();
  return man;
}

DiscreteManifold build_einstein_circle_product(const EinsteinPreset& preset, double L, int K) {
  if (!(L > 0)) throw ManifoldError("circle length must be positive");
  if (K < 4) throw ManifoldError("circle product needs K >= 4 nodes");
  if (!(preset.cross_volume > 0)) throw ManifoldError("preset cross-section volume must be positive");
  DiscreteManifold man;
  man.coeffs_ = make_coeffs(preset.n);
  man.kind_ = ManifoldKind::EinsteinCircleProduct;
  man.background_ = {preset.R0, preset.Ric_dir, preset.Q0};
  man.volume_ = preset.cross_volume * L;
  man.weights_ = Eigen::VectorXd::Constant(K, man.volume_ / K);
  man.chart_length_ = L;
  man.coords_.resize(K);
  for (int j = 0; j < K; ++j) man.coords_[j] = L * j / K;

  const CoeffTable& c = man.coeffs_;
  const double A = c.a_n * preset.R0 + c.b_pb * preset.Ric_dir;
  const double c0 = c.half_gap() * preset.Q0;
  const double unit = 2 * std::numbers::pi / L;
  auto symbol = [&](int m) {
    const double k2 = (unit * m) * (unit * m);
    return k2 * k2 + A * k2 + c0;
  };

  // Every admissible wavenumber, not only the resolved ones.
  const int m_turn = A < 0 ? static_cast<int>(std::ceil(std::sqrt(-A / 2) / unit)) + 1 : 0;
  for (int m = 0; m <= std::max(K / 2, m_turn); ++m) {
    if (!(symbol(m) > 0)) {
      std::ostringstream os;
      os << "preset " << preset.name << " is not coercive: symbol(" << unit * m
         << ") = " << symbol(m) << " <= 0";
      throw ManifoldError(os.str());
    }
  }

  man.basis_.resize(K, K);
  for (int j = 0; j < K; ++j) {
    man.basis_.row(j) = circle_basis_row(man.coords_[j], L, K, man.volume_).transpose();
  }
  man.multipliers_.resize(K);
  man.mode_index_.resize(K);
  man.multipliers_[0] = c0;
  man.mode_index_[0] = 0;
  int col = 1;
  for (int m = 1; col < K; ++m) {
    const bool nyquist = (K % 2 == 0) && (2 * m == K);
    const int copies = nyquist ? 1 : 2;
    for (int r = 0; r < copies && col < K; ++r, ++col) {
      man.multipliers_[col] = symbol(m);
      man.mode_index_[col] = m;
    }
  }
  man.op_norm_ = man.multipliers_.maxCoeff();
  man.op_min_ = man.multipliers_.minCoeff();
  return man;
}

DiscreteManifold make_matrix_manifold(int n, const Eigen::VectorXd& weights,
                                      const Eigen::MatrixXd& P, std::optional<double> R0,
                                      std::optional<double> Ric_dir, std::optional<double> Q0) {
  const Eigen::Index N = weights.size();
  if (N < 1) throw ManifoldError("matrix manifold needs N >= 1");
  if (P.rows() != N || P.cols() != N) throw ManifoldError("P must be N x N");
  for (Eigen::Index j = 0; j < N; ++j) {
    if (!(weights[j] > 0) || !std::isfinite(weights[j])) {
      throw ManifoldError("weight " + std::to_string(j) + " is not positive");
    }
  }
  if (!P.allFinite()) throw ManifoldError("P has non-finite entries");

  DiscreteManifold man;
  man.coeffs_ = make_coeffs(n);
  man.kind_ = ManifoldKind::MatrixLoaded;
  man.weights_ = weights;
  man.volume_ = weights.sum();
  man.chart_length_ = 0;

  const Eigen::MatrixXd S = weights.asDiagonal() * P;
  const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
  const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * scale) {
    std::ostringstream os;
    os << "matrix is asymmetric in the weighted inner product: max |WP - (WP)^T| = " << asym;
    throw ManifoldError(os.str());
  }
  man.form_ = 0.5 * (S + S.transpose());
  man.op_ = weights.cwiseInverse().asDiagonal() * man.form_;

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(
      man.form_, Eigen::MatrixXd(weights.asDiagonal()), Eigen::EigenvaluesOnly);
  const double lmin = ges.eigenvalues().minCoeff();
  if (!(lmin > 0)) {
    std::ostringstream os;
    os << "P is not positive definite: smallest eigenvalue " << lmin;
    throw ManifoldError(os.str());
  }
  man.op_norm_ = ges.eigenvalues().maxCoeff();
  man.op_min_ = lmin;
  man.chol_.compute(man.form_);
  if (man.chol_.info() != Eigen::Success) {
    throw SolverError("Cholesky factorization hit a non-positive pivot");
  }

  const double half_gap = man.coeffs_.half_gap();
  const Eigen::VectorXd p1 = man.op_ * Eigen::VectorXd::Ones(N);
  const double mean = weights.dot(p1) / man.volume_;
  const double spread = (p1.array() - mean).abs().maxCoeff();
  const bool constant = spread <= 1e-8 * std::max(1.0, std::abs(mean));
  const double q_from_p = mean / half_gap;
  if (Q0) {
    if (!constant) {
      throw ManifoldError("Q0 given but P(1) is not constant (spread " + std::to_string(spread) +
                          ")");
    }
    if (std::abs(*Q0 - q_from_p) > 1e-8 * std::max(1.0, std::abs(*Q0))) {
      std::ostringstream os;
      os << "Q0 = " << *Q0 << " inconsistent with P(1): expected " << q_from_p;
      throw ManifoldError(os.str());
    }
  }
  man.constant_identity_ = constant;
  man.background_.R0 = R0.value_or(1.0);
  man.background_.Ric_dir = Ric_dir.value_or(0.0);
  man.background_.Q0 = Q0.value_or(q_from_p);
  return man;
}

double integrate(const DiscreteManifold& man, const ScalarField& h) {
  man.check_compatible(h, "integrate");
  return man.weights().dot(h);
}

double lp_norm(const DiscreteManifold& man, const ScalarField& h, double p) {
  if (!(p >= 1)) throw ManifoldError("lp_norm needs p >= 1");
  man.check_compatible(h, "lp_norm");
  return std::pow(man.weights().dot(h.array().abs().pow(p).matrix()), 1.0 / p);
}

}  // namespace qflow
