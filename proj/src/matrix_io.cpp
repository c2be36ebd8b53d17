#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "qflow/errors.hpp"
#include "qflow/manifold.hpp"

namespace qflow {
namespace {

// Tokens with their source line, comments stripped.
struct Token {
  std::string text;
  int line;
};

std::vector<Token> tokenize(std::istream& in) {
  std::vector<Token> tokens;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string word;
    while (ls >> word) tokens.push_back({word, number});
  }
  return tokens;
}

class Reader {
 public:
  Reader(std::vector<Token> tokens, std::string source)
      : tokens_(std::move(tokens)), source_(std::move(source)) {}

  bool done() const { return pos_ >= tokens_.size(); }
  const Token& next() {
    if (done()) fail("unexpected end of file");
    return tokens_[pos_++];
  }
  double number() {
    const Token& t = next();
    try {
      std::size_t used = 0;
      const double v = std::stod(t.text, &used);
      if (used != t.text.size()) throw std::invalid_argument(t.text);
      return v;
    } catch (const std::exception&) {
      fail("line " + std::to_string(t.line) + ": expected a number, got '" + t.text + "'");
    }
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ManifoldError(source_ + ": " + msg);
  }

 private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::string source_;
};

}  // namespace

DiscreteManifold load_matrix_manifold(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifoldError("cannot open matrix manifold file " + path.string());
  Reader r(tokenize(in), path.string());

  std::optional<int> n, N;
  std::optional<double> R0, Ric_dir, Q0;
  Eigen::VectorXd weights;
  Eigen::MatrixXd P;
  while (!r.done()) {
    const Token key = r.next();
    if (key.text == "n") {
      n = static_cast<int>(r.number());
    } else if (key.text == "N") {
      N = static_cast<int>(r.number());
      if (*N < 1) r.fail("line " + std::to_string(key.line) + ": N must be positive");
    } else if (key.text == "weights") {
      if (!N) r.fail("line " + std::to_string(key.line) + ": 'weights' before 'N'");
      weights.resize(*N);
      for (int j = 0; j < *N; ++j) weights[j] = r.number();
    } else if (key.text == "P") {
      if (!N) r.fail("line " + std::to_string(key.line) + ": 'P' before 'N'");
      P.resize(*N, *N);
      for (int i = 0; i < *N; ++i)
        for (int j = 0; j < *N; ++j) P(i, j) = r.number();
    } else if (key.text == "R0") {
      R0 = r.number();
    } else if (key.text == "Ric_dir") {
      Ric_dir = r.number();
    } else if (key.text == "Q0") {
      Q0 = r.number();
    } else {
      r.fail("line " + std::to_string(key.line) + ": unknown field '" + key.text + "'");
    }
  }
  if (!n) r.fail("missing field 'n'");
  if (!N) r.fail("missing field 'N'");
  if (weights.size() != *N) r.fail("missing field 'weights'");
  if (P.rows() != *N) r.fail("missing field 'P'");
  return make_matrix_manifold(*n, weights, P, R0, Ric_dir, Q0);
}

void save_matrix_manifold(const std::filesystem::path& path, int n,
                          const Eigen::VectorXd& weights, const Eigen::MatrixXd& P,
                          std::optional<double> Q0) {
  std::ofstream out(path);
  if (!out) throw ManifoldError("cannot write " + path.string());
  out << std::setprecision(17);
  out << "# matrix manifold\n";
  out << "n " << n << "\nN " << weights.size() << "\nweights";
  for (Eigen::Index j = 0; j < weights.size(); ++j) out << ' ' << weights[j];
  out << "\nP\n";
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    for (Eigen::Index j = 0; j < P.cols(); ++j) out << (j ? " " : "") << P(i, j);
    out << '\n';
  }
  if (Q0) out << "Q0 " << *Q0 << '\n';
}

}  // namespace qflow
