#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>

#include "qflow/cli.hpp"
#include "qflow/errors.hpp"

namespace qflow {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

class LineContext {
 public:
  LineContext(const std::string& origin, int line, std::string key)
      : origin_(origin), line_(line), key_(std::move(key)) {}

  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << origin_ << ':' << line_ << ": " << msg;
    throw ConfigError(os.str());
  }

  // Accepts plain numbers and multiples of pi ("pi", "2pi", "0.5pi").
  double number(const std::string& text) const {
    std::string body = text;
    double factor = 1.0;
    if (body.size() >= 2 && body.compare(body.size() - 2, 2, "pi") == 0) {
      factor = std::numbers::pi;
      body.resize(body.size() - 2);
      if (body.empty()) return factor;
    }
    double v = 0;
    const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), v);
    if (ec != std::errc() || ptr != body.data() + body.size()) {
      fail("key '" + key_ + "': expected a number, got '" + text + "'");
    }
    return v * factor;
  }

  long integer(const std::string& text) const {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
      fail("key '" + key_ + "': expected an integer, got '" + text + "'");
    }
    return v;
  }

  std::vector<double> numbers(const std::string& text) const {
    std::string spaced = text;
    std::replace(spaced.begin(), spaced.end(), ',', ' ');
    std::vector<double> out;
    for (const std::string& w : split_words(spaced)) out.push_back(number(w));
    if (out.empty()) fail("key '" + key_ + "': expected a list of numbers");
    return out;
  }

  int line() const { return line_; }

 private:
  const std::string& origin_;
  int line_;
  std::string key_;
};

using Handler = std::function<void(RunConfig&, const std::string&, const LineContext&)>;

Integrator parse_integrator(const std::string& v, const LineContext& ctx) {
  if (v == "rk4") return Integrator::RK4;
  if (v == "etd") return Integrator::ETD;
  ctx.fail("integrator must be rk4 or etd, got '" + v + "'");
}

Scenario parse_scenario(const std::string& v, const LineContext& ctx) {
  if (v == "flow") return Scenario::Flow;
  if (v == "bubble-sweep" || v == "sweep") return Scenario::BubbleSweep;
  if (v == "validate") return Scenario::Validate;
  if (v == "crosscheck") return Scenario::Crosscheck;
  ctx.fail("unknown scenario '" + v + "' (flow, bubble-sweep, validate, crosscheck)");
}

void manifold_shorthand(RunConfig& c, const std::string& v, const LineContext& ctx) {
  const auto w = split_words(v);
  if (w.empty()) ctx.fail("manifold needs a value");
  if (w[0] == "sphere") {
    c.manifold.kind = "sphere";
    if (w.size() > 1) c.manifold.n = static_cast<int>(ctx.integer(w[1]));
    if (w.size() > 2) c.manifold.K = static_cast<int>(ctx.integer(w[2]));
  } else if (w[0] == "matrix") {
    if (w.size() < 2) ctx.fail("manifold = matrix needs a file path");
    c.manifold.kind = "matrix";
    c.manifold.file = w[1];
  } else if (w[0] == "product") {
    c.manifold.kind = "product";
  } else if (w[0].starts_with('s') && w[0].ends_with("xs1")) {
    c.manifold.kind = "product";
    c.manifold.preset = w[0];
  } else {
    ctx.fail("unknown manifold '" + w[0] + "' (sphere, s4xs1, matrix <file>)");
  }
}

void f_shorthand(RunConfig& c, const std::string& v, const LineContext& ctx) {
  const auto w = split_words(v);
  if (w.empty()) ctx.fail("f needs a value");
  c.f.profile = w[0];
  if (w[0] == "const") {
    if (w.size() > 1) c.f.c = ctx.number(w[1]);
  } else if (w[0] == "cosine-bump") {
    if (w.size() > 1) c.f.a = ctx.number(w[1]);
    if (w.size() > 2) c.f.k = static_cast<int>(ctx.integer(w[2]));
  } else if (w[0] == "polar-bump") {
    if (w.size() > 1) c.f.a = ctx.number(w[1]);
    if (w.size() > 2) c.f.m = static_cast<int>(ctx.integer(w[2]));
  } else if (w[0] == "file") {
    if (w.size() < 2) ctx.fail("f = file needs a path");
    c.f.file = w[1];
  } else {
    ctx.fail("unknown f profile '" + w[0] + "' (const, cosine-bump, polar-bump, file)");
  }
}

void u0_shorthand(RunConfig& c, const std::string& v, const LineContext& ctx) {
  const auto w = split_words(v);
  if (w.empty()) ctx.fail("u0 needs a value");
  c.u0.type = w[0];
  if (w[0] == "constant") {
    if (w.size() > 1) c.u0.value = ctx.number(w[1]);
  } else if (w[0] == "perturbed") {
    if (w.size() > 1) c.u0.amplitude = ctx.number(w[1]);
    if (w.size() > 2) c.u0.mode = static_cast<int>(ctx.integer(w[2]));
  } else if (w[0] == "bubble") {
    if (w.size() > 1) c.u0.bubble.eps = ctx.number(w[1]);
    if (w.size() > 2) c.u0.bubble.delta = ctx.number(w[2]);
  } else if (w[0] == "file") {
    if (w.size() < 2) ctx.fail("u0 = file needs a path");
    c.u0.file = w[1];
  } else {
    ctx.fail("unknown u0 type '" + w[0] + "' (constant, perturbed, bubble, file)");
  }
}

const std::map<std::string, Handler>& handlers() {
  static const std::map<std::string, Handler> table = [] {
    std::map<std::string, Handler> t;
    auto num = [](double RunConfig::*field) {
      return Handler([field](RunConfig& c, const std::string& v, const LineContext& ctx) {
        c.*field = ctx.number(v);
      });
    };
    t["scenario"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      c.scenario = parse_scenario(v, ctx);
    };
    t["seed"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      c.seed = static_cast<std::uint64_t>(ctx.integer(v));
    };
    t["manifold"] = manifold_shorthand;
    t["f"] = f_shorthand;
    t["u0"] = u0_shorthand;

    t["manifold.kind"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      if (v != "sphere" && v != "product" && v != "matrix") {
        ctx.fail("manifold.kind must be sphere, product or matrix, got '" + v + "'");
      }
      c.manifold.kind = v;
    };
    t["manifold.preset"] = [](RunConfig& c, const std::string& v, const LineContext&) {
      c.manifold.preset = v;
    };
    t["manifold.n"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      c.manifold.n = static_cast<int>(ctx.integer(v));
    };
    t["manifold.K"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      c.manifold.K = static_cast<int>(ctx.integer(v));
    };
    t["manifold.L"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      c.manifold.L = ctx.number(v);
    };
    t["manifold.file"] = [](RunConfig& c, const std::string& v, const LineContext&) {
      c.manifold.file = v;
    };

    t["f.profile"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      if (v != "const" && v != "cosine-bump" && v != "polar-bump" && v != "file") {
        ctx.fail("unknown f profile '" + v + "' (const, cosine-bump, polar-bump, file)");
      }
      c.f.profile = v;
    };
    t["f.c"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) { c.f.c = ctx.number(v); };
    t["f.a"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) { c.f.a = ctx.number(v); };
    t["f.k"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      c.f.k = static_cast<int>(ctx.integer(v));
    };
    t["f.m"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      c.f.m = static_cast<int>(ctx.integer(v));
    };
    t["f.file"] = [](RunConfig& c, const std::string& v, const LineContext&) { c.f.file = v; };

    t["u0.type"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      if (v != "constant" && v != "perturbed" && v != "bubble" && v != "file") {
        ctx.fail("unknown u0 type '" + v + "' (constant, perturbed, bubble, file)");
      }
      c.u0.type = v;
    };
    t["u0.value"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      c.u0.value = ctx.number(v);
    };
    t["u0.amplitude"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      c.u0.amplitude = ctx.number(v);
    };
    t["u0.mode"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      c.u0.mode = static_cast<int>(ctx.integer(v));
    };
    t["u0.eps"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      c.u0.bubble.eps = ctx.number(v);
    };
    t["u0.delta"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      c.u0.bubble.delta = ctx.number(v);
    };
    t["u0.x0"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      c.u0.bubble.x0 = ctx.number(v);
    };
    t["u0.chart"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      if (v == "geodesic") {
        c.u0.bubble.chart = BubbleChart::Geodesic;
      } else if (v == "flat") {
        c.u0.bubble.chart = BubbleChart::ConformallyFlat;
      } else {
        ctx.fail("u0.chart must be geodesic or flat, got '" + v + "'");
      }
    };
    t["u0.file"] = [](RunConfig& c, const std::string& v, const LineContext&) { c.u0.file = v; };

    std::map<std::string, Handler> flow_keys;
    flow_keys["integrator"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      c.flow.integrator = parse_integrator(v, ctx);
    };
    flow_keys["dt"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      c.flow.dt = ctx.number(v);
      if (!(c.flow.dt > 0)) ctx.fail("dt must be positive");
    };
    flow_keys["t_max"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      c.flow.t_max = ctx.number(v);
      if (!(c.flow.t_max >= 0)) ctx.fail("t_max must be non-negative");
    };
    flow_keys["tol_F2"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      c.flow.tol_F2 = ctx.number(v);
      if (!(c.flow.tol_F2 > 0)) ctx.fail("tol_F2 must be positive");
    };
    flow_keys["tol_residual"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      c.flow.tol_residual = ctx.number(v);
      if (!(c.flow.tol_residual > 0)) ctx.fail("tol_residual must be positive");
    };
    flow_keys["record_every"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      const long r = ctx.integer(v);
      if (r < 1) ctx.fail("record_every must be at least 1");
      c.flow.record_every = static_cast<int>(r);
    };
    for (const auto& [key, h] : flow_keys) {
      t[key] = h;
      t["flow." + key] = h;
    }

    t["crosscheck.T"] = num(&RunConfig::crosscheck_T);
    t["crosscheck.dt"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      c.crosscheck_dt = ctx.number(v);
      if (!(c.crosscheck_dt > 0)) ctx.fail("crosscheck.dt must be positive");
    };
    t["crosscheck.normalize"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      if (v == "true" || v == "yes" || v == "1") {
        c.crosscheck_normalize = true;
      } else if (v == "false" || v == "no" || v == "0") {
        c.crosscheck_normalize = false;
      } else {
        ctx.fail("crosscheck.normalize must be true or false, got '" + v + "'");
      }
    };
    t["sweep.eps"] = [](RunConfig& c, const std::string& v, const LineContext& ctx) {
      c.sweep_eps = ctx.numbers(v);
      for (double e : c.sweep_eps) {
        if (!(e > 0)) ctx.fail("sweep.eps entries must be positive");
      }
    };
    t["sweep.delta"] = num(&RunConfig::sweep_delta);
    auto out = [](RunConfig& c, const std::string& v, const LineContext&) { c.output_dir = v; };
    t["output"] = out;
    t["output.dir"] = out;
    return t;
  }();
  return table;
}

}  // namespace

const char* to_string(Scenario s) {
  switch (s) {
    case Scenario::Flow:
      return "flow";
    case Scenario::BubbleSweep:
      return "bubble-sweep";
    case Scenario::Validate:
      return "validate";
    case Scenario::Crosscheck:
      return "crosscheck";
  }
  return "?";
}

RunConfig parse_config_text(std::string_view text, const std::string& origin, bool strict,
                            std::vector<std::string>* warnings) {
  RunConfig cfg;
  std::string section;
  bool scenario_given = false;
  std::istringstream in{std::string(text)};
  int line_no = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    LineContext ctx(origin, line_no, "");
    if (line.front() == '[') {
      if (line.back() != ']') ctx.fail("malformed section header '" + line + "'");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) ctx.fail("expected key = value, got '" + line + "'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) ctx.fail("empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    const auto it = handlers().find(full);
    if (it == handlers().end()) {
      std::ostringstream os;
      os << origin << ':' << line_no << ": unknown key '" << full << "'";
      if (strict) throw ConfigError(os.str());
      if (warnings) warnings->push_back(os.str());
      continue;
    }
    if (full == "scenario") scenario_given = true;
    if (value.empty()) LineContext(origin, line_no, full).fail("key '" + full + "' has no value");
    it->second(cfg, value, LineContext(origin, line_no, full));
  }

  if (cfg.manifold.kind.empty()) {
    throw ConfigError(origin + ": missing required field 'manifold'");
  }
  if (cfg.manifold.kind == "matrix" && cfg.manifold.file.empty()) {
    throw ConfigError(origin + ": matrix manifold needs 'manifold.file'");
  }
  if (scenario_given &&
      (cfg.scenario == Scenario::Flow || cfg.scenario == Scenario::Crosscheck) &&
      cfg.u0.type.empty()) {
    throw ConfigError(origin + ": scenario " + to_string(cfg.scenario) +
                      " needs the initial data field 'u0'");
  }
  if (cfg.f.profile == "file" && cfg.f.file.empty()) {
    throw ConfigError(origin + ": f = file needs a path");
  }
  if (cfg.u0.type == "file" && cfg.u0.file.empty()) {
    throw ConfigError(origin + ": u0 = file needs a path");
  }
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path, bool strict,
                       std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig cfg = parse_config_text(buf.str(), path.string(), strict, warnings);
  cfg.source = path;
  const auto base = path.parent_path();
  auto resolve = [&](std::filesystem::path& p) {
    if (!p.empty() && p.is_relative()) p = base / p;
  };
  resolve(cfg.manifold.file);
  resolve(cfg.f.file);
  resolve(cfg.u0.file);
  resolve(cfg.output_dir);
  return cfg;
}

}  // namespace qflow
