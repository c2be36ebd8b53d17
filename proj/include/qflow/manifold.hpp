#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "qflow/coeffs.hpp"

namespace qflow {

/// Nodal samples of a function on a DiscreteManifold.
using ScalarField = Eigen::VectorXd;

enum class ManifoldKind { SphereAxisym, EinsteinCircleProduct, MatrixLoaded };

const char* to_string(ManifoldKind kind);

/// Background curvature scalars of (M, g0).
struct Background {
  double R0 = 0;       ///< scalar curvature
  double Ric_dir = 0;  ///< Ricci curvature along the reduced direction
  double Q0 = 0;       ///< Q-curvature
};

/// Constants of an Einstein base B^{n-1} times a circle of length L.
struct EinsteinPreset {
  std::string name;
  int n = 5;
  double R0 = 0;
  double Ric_dir = 0;
  double Q0 = 0;
  double cross_volume = 0;  ///< vol(B^{n-1})
};

/// "s4xs1" and in general "s{m}xs1" (unit round S^m times a circle, n = m+1).
EinsteinPreset einstein_preset(const std::string& name);

/// A discretized background manifold. Immutable after construction.
///
/// Spectral kinds store a W-orthonormal basis Phi and multipliers Lambda, so
/// P = Phi Lambda Phi^T W. The constant mode is applied through the exact
/// quadrature mean, which keeps P(1) = ((n-4)/2) Q0 at machine precision even
/// when the top multipliers are large. The matrix kind stores the symmetric
/// form matrix S = W P and its Cholesky factor.
class DiscreteManifold {
 public:
  const CoeffTable& coeffs() const { return coeffs_; }
  int dim() const { return coeffs_.n; }
  ManifoldKind kind() const { return kind_; }
  Eigen::Index size() const { return weights_.size(); }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Background& background() const { return background_; }
  double volume() const { return volume_; }

  /// Polar angle (sphere) or arclength (circle) of each node; empty for matrices.
  const Eigen::VectorXd& coordinates() const { return coords_; }
  /// Circle length for the product kind, pi for the sphere.
  double chart_length() const { return chart_length_; }
  bool has_chart() const { return kind_ != ManifoldKind::MatrixLoaded; }
  /// Distance from coordinate x0 to node j along the chart.
  double distance(double x0, Eigen::Index j) const;

  bool is_spectral() const { return kind_ != ManifoldKind::MatrixLoaded; }
  /// Spectral kinds: basis(j, k) and multiplier k.
  const Eigen::MatrixXd& basis() const { return basis_; }
  const Eigen::VectorXd& multipliers() const { return multipliers_; }
  /// Degree (sphere) or wavenumber index (circle) of each spectral mode.
  const Eigen::VectorXi& mode_index() const { return mode_index_; }

  /// Matrix kind: the form matrix S = W P.
  const Eigen::MatrixXd& form_matrix() const { return form_; }

  /// Largest multiplier / eigenvalue; scales roundoff in apply().
  double operator_norm() const { return op_norm_; }
  /// Smallest multiplier / eigenvalue (coercivity constant).
  double min_eigenvalue() const { return op_min_; }
  /// False when a loaded matrix has non-constant P(1).
  bool constant_identity_holds() const { return constant_identity_; }

  ScalarField apply(const ScalarField& u) const;
  ScalarField solve(const ScalarField& rhs) const;
  /// <u, P v> in the weighted inner product.
  double form(const ScalarField& u, const ScalarField& v) const;

  /// Spectral projection of the Dirac mass at chart coordinate x0.
  ScalarField point_mass(double x0) const;
  /// Dirac mass at node j: e_j / w_j.
  ScalarField point_mass_at_node(Eigen::Index j) const;

  void check_compatible(const ScalarField& u, const char* what) const;

 private:
  DiscreteManifold() = default;

  friend DiscreteManifold build_sphere_axisym(int n, int K);
  friend DiscreteManifold build_einstein_circle_product(const EinsteinPreset& preset, double L,
                                                        int K);
  friend DiscreteManifold make_matrix_manifold(int n, const Eigen::VectorXd& weights,
                                               const Eigen::MatrixXd& P,
                                               std::optional<double> R0,
                                               std::optional<double> Ric_dir,
                                               std::optional<double> Q0);

  Eigen::VectorXd coefficients(const ScalarField& u) const;

  CoeffTable coeffs_;
  ManifoldKind kind_ = ManifoldKind::MatrixLoaded;
  Eigen::VectorXd weights_;
  double volume_ = 0;
  Background background_;
  Eigen::VectorXd coords_;
  double chart_length_ = 0;

  Eigen::MatrixXd basis_;
  Eigen::VectorXd multipliers_;
  Eigen::VectorXi mode_index_;

  Eigen::MatrixXd form_;
  Eigen::MatrixXd op_;
  Eigen::LLT<Eigen::MatrixXd> chol_;

  double op_norm_ = 0;
  double op_min_ = 0;
  bool constant_identity_ = true;
};

/// Round S^n on zonal functions with K Gauss nodes / K zonal modes.
DiscreteManifold build_sphere_axisym(int n, int K);

/// Einstein base times a circle of length L, K Fourier nodes.
DiscreteManifold build_einstein_circle_product(const EinsteinPreset& preset, double L, int K);

/// Validates and wraps a dense operator P acting on nodal values.
/// Requires W P symmetric to 1e-10 and positive definite.
DiscreteManifold make_matrix_manifold(int n, const Eigen::VectorXd& weights,
                                      const Eigen::MatrixXd& P,
                                      std::optional<double> R0 = std::nullopt,
                                      std::optional<double> Ric_dir = std::nullopt,
                                      std::optional<double> Q0 = std::nullopt);

/// Reads the whitespace-separated matrix manifold format.
DiscreteManifold load_matrix_manifold(const std::filesystem::path& path);

/// Writes the format read by load_matrix_manifold.
void save_matrix_manifold(const std::filesystem::path& path, int n,
                          const Eigen::VectorXd& weights, const Eigen::MatrixXd& P,
                          std::optional<double> Q0 = std::nullopt);

/// Sum of weights times values.
double integrate(const DiscreteManifold& man, const ScalarField& h);

/// (integral |h|^p)^{1/p}, p >= 1.
double lp_norm(const DiscreteManifold& man, const ScalarField& h, double p);

/// Samples a function of the chart coordinate at the nodes.
template <typename F>
ScalarField sample(const DiscreteManifold& man, F&& fn) {
  ScalarField out(man.size());
  for (Eigen::Index j = 0; j < man.size(); ++j) out[j] = fn(man.coordinates()[j]);
  return out;
}

}  // namespace qflow
