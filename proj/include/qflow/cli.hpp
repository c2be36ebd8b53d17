#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "qflow/bubble.hpp"
#include "qflow/flow.hpp"

namespace qflow {

enum class Scenario { Flow, BubbleSweep, Validate, Crosscheck };

const char* to_string(Scenario s);

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int not_converged = 2;
inline constexpr int positivity = 3;
inline constexpr int config = 4;
}  // namespace exit_code

struct ManifoldSpec {
  std::string kind;  ///< sphere | product | matrix
  int n = 5;
  int K = 64;
  std::string preset = "s4xs1";
  double L = 0;  ///< 0 means 2 pi
  std::filesystem::path file;
};

struct FSpec {
  std::string profile = "const";  ///< const | cosine-bump | polar-bump | file
  double c = 1;
  double a = 0;
  int k = 1;
  int m = 2;
  std::filesystem::path file;
};

struct InitSpec {
  std::string type;  ///< constant | perturbed | bubble | file
  double value = 1;
  double amplitude = 0.1;
  int mode = 1;
  BubbleParams bubble;
  std::filesystem::path file;
};

struct RunConfig {
  std::filesystem::path source;
  Scenario scenario = Scenario::Flow;
  ManifoldSpec manifold;
  FSpec f;
  InitSpec u0;
  FlowConfig flow;
  double crosscheck_T = 1;
  double crosscheck_dt = 1e-3;
  bool crosscheck_normalize = true;  ///< rescale u0 to alpha(0) = 1
  std::vector<double> sweep_eps{0.2, 0.1, 0.05};
  double sweep_delta = 0.4;
  std::filesystem::path output_dir = "qflow-out";
  std::uint64_t seed = 1;
};

/// Parses key = value lines with optional [section] headers and # comments.
/// Unknown keys are errors in strict mode and are otherwise collected in warnings.
RunConfig parse_config_text(std::string_view text, const std::string& origin, bool strict,
                            std::vector<std::string>* warnings = nullptr);

/// Reads a file; relative paths inside resolve against its directory.
RunConfig parse_config(const std::filesystem::path& path, bool strict,
                       std::vector<std::string>* warnings = nullptr);

DiscreteManifold build_manifold(const ManifoldSpec& spec);
ScalarField build_f(const DiscreteManifold& man, const FSpec& spec);
ScalarField build_u0(const DiscreteManifold& man, const InitSpec& spec);

/// Lowest nonconstant mode of P scaled to sup norm 1 (index picks higher modes).
ScalarField perturbation_mode(const DiscreteManifold& man, int index);

/// Whitespace-separated numbers with # comments.
ScalarField read_field_file(const std::filesystem::path& path, Eigen::Index expected);

/// Honors QFLOW_OUT.
std::filesystem::path output_directory(const RunConfig& cfg);

int execute(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int validate(const RunConfig& cfg, std::ostream& out);

}  // namespace qflow
