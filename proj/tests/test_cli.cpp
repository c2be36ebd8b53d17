#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "qflow/cli.hpp"
#include "qflow/errors.hpp"

using namespace qflow;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = QFLOW_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("qflow_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write(const fs::path& path, const std::string& body) {
  std::ofstream(path) << body;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_config(RunConfig cfg, const fs::path& outdir) {
  cfg.output_dir = outdir;
  std::ostringstream out, err;
  const int code = execute(cfg, out, err);
  return {code, out.str(), err.str()};
}

}  // namespace

TEST_CASE("minimal config fills defaults") {
  const auto cfg = parse_config_text("manifold = s4xs1\nf = const 1\nu0 = perturbed 0.1\n", "min", true);
  CHECK(cfg.scenario == Scenario::Flow);
  CHECK(cfg.manifold.kind == "product");
  CHECK(cfg.manifold.preset == "s4xs1");
  CHECK(cfg.f.profile == "const");
  CHECK(cfg.u0.type == "perturbed");
  CHECK(cfg.u0.amplitude == doctest::Approx(0.1));
  CHECK(cfg.flow.dt == 1e-3);
  CHECK(cfg.flow.tol_F2 == 1e-10);
  CHECK(cfg.flow.tol_residual == 1e-8);
  CHECK(cfg.flow.record_every == 10);
}

TEST_CASE("config errors carry line numbers") {
  CHECK_THROWS_WITH_AS(parse_config_text("manifold = s4xs1\ndt = -1\n", "c", true),
                       doctest::Contains("c:2: dt must be positive"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("manifold = s4xs1\ndtt = 1\n", "c", true),
                       doctest::Contains("unknown key 'dtt'"), ConfigError);
  std::vector<std::string> warnings;
  CHECK_NOTHROW(parse_config_text("manifold = s4xs1\ndtt = 1\n", "c", false, &warnings));
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("dtt") != std::string::npos);
  CHECK_THROWS_WITH_AS(parse_config_text("f = const 1\n", "c", true),
                       doctest::Contains("manifold"), ConfigError);
  CHECK_THROWS_AS(parse_config_text("manifold = s4xs1\n[flow]\ndt = abc\n", "c", true), ConfigError);
}

TEST_CASE("shipped configs parse strictly") {
  for (const auto& entry : fs::directory_iterator(kConfigs)) {
    CAPTURE(entry.path().string());
    CHECK_NOTHROW(parse_config(entry.path(), true));
  }
  const auto cfg = parse_config(kConfigs / "benchmark.cfg", true);
  CHECK(cfg.manifold.L == doctest::Approx(4.85));
  CHECK(cfg.flow.t_max == 500);
}

TEST_CASE("exit code 0: converging flow writes its CSVs") {
  auto cfg = parse_config(kConfigs / "bump.cfg", true);
  const auto dir = scratch("ok");
  const auto r = run_config(cfg, dir);
  CHECK(r.code == exit_code::ok);
  CHECK(r.out.find("converged=yes") != std::string::npos);
  CHECK(fs::exists(dir / "trajectory.csv"));
  const std::string report = slurp(dir / "report.csv");
  CHECK(report.rfind("status,converged,", 0) == 0);
  CHECK(report.find("converged,1,") != std::string::npos);
}

TEST_CASE("exit code 2: forced non-convergence") {
  auto cfg = parse_config_text(
      "manifold = s4xs1\nf = const 1\nu0 = perturbed 0.1\nt_max = 0.001\ntol_F2 = 1e-20\n", "c", true);
  const auto r = run_config(cfg, scratch("maxtime"));
  CHECK(r.code == exit_code::not_converged);
  CHECK(r.out.find("converged=no") != std::string::npos);
}

TEST_CASE("exit code 3: negative entry in the u0 file") {
  const auto dir = scratch("negative");
  std::ostringstream values;
  for (int j = 0; j < 16; ++j) values << (j == 5 ? -0.5 : 1.0) << '\n';
  write(dir / "u0.txt", values.str());
  const auto path = write(dir / "neg.cfg",
                          "manifold = s4xs1\nf = const 1\nu0 = file u0.txt\n[manifold]\nK = 16\n");
  const auto r = run_config(parse_config(path, true), dir / "out");
  CHECK(r.code == exit_code::positivity);
  CHECK(r.err.find("node 5") != std::string::npos);
}

TEST_CASE("exit code 4: configuration problems") {
  SUBCASE("missing u0") {
    auto cfg = parse_config_text("manifold = s4xs1\n", "c", true);
    cfg.scenario = Scenario::Flow;
    CHECK(run_config(cfg, scratch("nou0")).code == exit_code::config);
  }
  SUBCASE("f profile on the wrong manifold") {
    auto cfg = parse_config_text("manifold = sphere 5 32\nf = cosine-bump 0.3\nu0 = constant 1\n", "c", true);
    CHECK(run_config(cfg, scratch("badf")).code == exit_code::config);
  }
  SUBCASE("wrong length of a field file") {
    const auto dir = scratch("short");
    write(dir / "u0.txt", "1 1 1\n");
    const auto path = write(dir / "c.cfg", "manifold = s4xs1\nu0 = file u0.txt\n");
    CHECK(run_config(parse_config(path, true), dir / "out").code == exit_code::config);
  }
}

TEST_CASE("validate") {
  SUBCASE("product preset passes") {
    std::ostringstream out;
    CHECK(validate(parse_config(kConfigs / "validate-product.cfg", true), out) == 0);
    CHECK(out.str().find("ALL PASS") != std::string::npos);
  }
  SUBCASE("sphere multipliers pass") {
    std::ostringstream out;
    CHECK(validate(parse_config(kConfigs / "validate-sphere.cfg", true), out) == 0);
    CHECK(out.str().find("PASS spectral-multipliers") != std::string::npos);
  }
  SUBCASE("asymmetric matrix fails self-adjointness") {
    const auto dir = scratch("asym");
    write(dir / "m.txt", "n 5\nN 2\nweights 1 1\nP 1 2\n  0 1\n");
    const auto path = write(dir / "v.cfg", "manifold = matrix m.txt\n");
    std::ostringstream out;
    CHECK(validate(parse_config(path, true), out) != 0);
    CHECK(out.str().find("FAIL self-adjointness") != std::string::npos);
  }
  SUBCASE("random matrix manifold passes") {
    const auto dir = scratch("matrix");
    const auto mc = oracle::random_matrix_case(8);
    save_matrix_manifold(dir / "m.txt", mc.n, mc.weights, mc.P);
    const auto path = write(dir / "v.cfg", "manifold = matrix m.txt\n");
    std::ostringstream out;
    CHECK(validate(parse_config(path, true), out) == 0);
  }
}

TEST_CASE("determinism: identical runs give byte-identical CSVs") {
  auto cfg = parse_config_text(
      "manifold = s4xs1\nf = const 1\nu0 = perturbed 0.1\nt_max = 2\n[manifold]\nK = 32\nL = 4.85\n", "c",
      true);
  const auto a = scratch("det_a"), b = scratch("det_b");
  run_config(cfg, a);
  run_config(cfg, b);
  for (const char* name : {"trajectory.csv", "report.csv"}) {
    CAPTURE(name);
    const std::string x = slurp(a / name);
    CHECK_FALSE(x.empty());
    CHECK(x == slurp(b / name));
  }
}

TEST_CASE("QFLOW_OUT overrides the output directory") {
  const auto dir = scratch("env");
  auto cfg = parse_config_text("manifold = s4xs1\n", "c", true);
  cfg.output_dir = "somewhere-else";
  ::setenv("QFLOW_OUT", dir.c_str(), 1);
  CHECK(output_directory(cfg) == dir);
  ::unsetenv("QFLOW_OUT");
  CHECK(output_directory(cfg) == "somewhere-else");
}

TEST_CASE("sweep writes asymptotics and certificates") {
  auto cfg = parse_config(kConfigs / "sweep.cfg", true);
  const auto dir = scratch("sweep");
  const auto r = run_config(cfg, dir);
  CHECK(r.code == exit_code::ok);
  const std::string asym = slurp(dir / "asymptotics.csv");
  CHECK(asym.rfind("eps,value,reference,rel_gap\n", 0) == 0);
  CHECK(std::count(asym.begin(), asym.end(), '\n') == 4);
  CHECK(slurp(dir / "certificates.csv").rfind("eps,E_f,threshold,margin,min_u0,min_Pu0\n", 0) == 0);
}

TEST_CASE("crosscheck scenario") {
  auto cfg = parse_config(kConfigs / "crosscheck.cfg", true);
  cfg.crosscheck_dt = 1e-3;
  const auto dir = scratch("cross");
  const auto r = run_config(cfg, dir);
  CHECK(r.code == exit_code::ok);
  CHECK(r.out.find("crosscheck PASS") != std::string::npos);
  CHECK(slurp(dir / "report.csv").rfind("max_u_deviation,", 0) == 0);
}

TEST_CASE("perturbation modes") {
  const auto M = build_einstein_circle_product(einstein_preset("s4xs1"), 4.85, 32);
  const ScalarField m1 = perturbation_mode(M, 1);
  CHECK(m1.cwiseAbs().maxCoeff() == doctest::Approx(1));
  CHECK(std::abs(M.weights().dot(m1)) < 1e-12);
  CHECK_THROWS_AS(perturbation_mode(M, 0), ConfigError);
  const auto mc = oracle::random_matrix_case(3);
  const auto X = make_matrix_manifold(mc.n, mc.weights, mc.P);
  const ScalarField x1 = perturbation_mode(X, 1);
  CHECK(std::abs(X.weights().dot(x1)) < 1e-10);
  CHECK_THROWS_AS(perturbation_mode(X, 6), ConfigError);
}
