#include "ermakov/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ermakov/error.hpp"

namespace ermakov::cli {

using nlohmann::json;

namespace {

const std::map<std::string, std::string, std::less<>> kPresets = {
    {"winternitz-default", R"({
      "system": {"kind": "winternitz", "params": {"mu0": 1, "g1": 1, "g2": 0.5, "g3": 1}},
      "initial": {"r": 1, "theta": "pi/2", "rdot": 0, "thetadot": 2},
      "t_span": [0, 10]
    })"},
    {"uniform-rotation", R"({
      "system": {"kind": "linearizable",
                 "functions": {"rho": "1", "A": "0", "B": "0", "C": "0", "F": "-1", "V": "0"}},
      "initial": {"r": 1, "theta": 0, "rdot": 0, "thetadot": 1},
      "t_span": [0, 2]
    })"},
    {"free-motion-demo", R"({
      "system": {"kind": "free_motion", "functions": {"f": "u", "rho": "1"}},
      "initial": {"r": 1, "theta": "pi/4", "rdot": 0.1, "thetadot": 3},
      "t_span": [0, 0.1]
    })"},
};

const std::set<std::string, std::less<>> kReserved = {
    "t", "r", "theta", "rdot", "thetadot", "L", "x", "y", "xdot", "ydot", "u", "v", "pi"};

std::string join(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError(join(path, key), "unknown key");
  }
}

double number(const json& v, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      const Expression e = expr::parse(v.get<std::string>());
      if (!e.free_variables().empty()) throw ConfigError(path, "constant expression expected");
      const double x = e.evaluate({});
      if (std::isfinite(x)) return x;
    } catch (const ParseError& err) {
      throw ConfigError(path, err.what());
    } catch (const EvaluationError& err) {
      throw ConfigError(path, err.what());
    }
  }
  throw ConfigError(path, "expected a finite number");
}

std::pair<double, double> span(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2) throw ConfigError(path, "expected [lo, hi]");
  const double a = number(v[0], path + "[0]");
  const double b = number(v[1], path + "[1]");
  if (a == b) throw ConfigError(path, "degenerate span");
  return {a, b};
}

struct KindInfo {
  SystemKind kind;
  std::string_view name;
  std::vector<std::string_view> required;
  std::vector<std::string_view> optional;
};

const std::vector<KindInfo>& kinds() {
  static const std::vector<KindInfo> table = {
      {SystemKind::Cartesian, "cartesian", {"f", "g", "omega_sq"}, {}},
      {SystemKind::Polar, "polar", {"F", "V", "omega_sq"}, {}},
      {SystemKind::Linearizable, "linearizable", {"rho", "A", "B", "C", "F", "V"}, {"omega_sq"}},
      {SystemKind::Kepler, "kepler", {"F", "G", "V"}, {}},
      {SystemKind::Winternitz, "winternitz", {}, {}},
      {SystemKind::FreeMotion, "free_motion", {"f", "rho"}, {}},
  };
  return table;
}

std::set<std::string> variables_for(SystemKind kind, std::string_view fn) {
  if (fn == "f") return {"u"};
  if (fn == "g") return {"v"};
  if (fn == "rho") return {"t"};
  if (fn == "A" || fn == "B" || fn == "C") return {"theta", "L"};
  if (fn == "omega_sq") {
    if (kind == SystemKind::Cartesian) return {"t", "x", "y", "xdot", "ydot"};
    return {"t", "r", "theta", "rdot", "thetadot", "L"};
  }
  return {"theta"};
}

void parse_system(const json& sys, RunConfig& cfg) {
  check_keys(sys, "system", {"kind", "functions", "params"});
  if (!sys.contains("kind")) throw ConfigError("system.kind", "missing");
  if (!sys["kind"].is_string()) throw ConfigError("system.kind", "expected a string");
  const std::string kind_name = sys["kind"].get<std::string>();
  const auto it = std::find_if(kinds().begin(), kinds().end(),
                               [&](const KindInfo& k) { return k.name == kind_name; });
  if (it == kinds().end()) throw ConfigError("system.kind", "unknown kind '" + kind_name + "'");
  cfg.kind = it->kind;

  if (sys.contains("params")) {
    const json& params = sys["params"];
    if (!params.is_object()) throw ConfigError("system.params", "expected an object");
    for (const auto& [name, value] : params.items()) {
      const std::string path = "system.params." + name;
      if (kReserved.count(name)) throw ConfigError(path, "reserved variable name");
      if (cfg.kind == SystemKind::Winternitz && name != "mu0" && name != "g1" && name != "g2" &&
          name != "g3")
        throw ConfigError(path, "unknown key");
      cfg.params[name] = number(value, path);
    }
  }
  if (cfg.kind == SystemKind::Winternitz) {
    auto pick = [&](const char* key, double& slot) {
      if (auto p = cfg.params.find(key); p != cfg.params.end()) slot = p->second;
    };
    pick("mu0", cfg.winternitz.mu0);
    pick("g1", cfg.winternitz.g1);
    pick("g2", cfg.winternitz.g2);
    pick("g3", cfg.winternitz.g3);
  }

  const json functions = sys.contains("functions") ? sys["functions"] : json::object();
  if (!functions.is_object()) throw ConfigError("system.functions", "expected an object");
  for (const auto& [name, value] : functions.items()) {
    const std::string path = "system.functions." + name;
    const bool known =
        std::find(it->required.begin(), it->required.end(), name) != it->required.end() ||
        std::find(it->optional.begin(), it->optional.end(), name) != it->optional.end();
    if (!known) throw ConfigError(path, "unknown key for kind " + kind_name);
    if (!value.is_string()) throw ConfigError(path, "expected an expression string");
    Expression e;
    try {
      e = expr::simplify(expr::bind_parameters(expr::parse(value.get<std::string>()), cfg.params));
    } catch (const ParseError& err) {
      throw ConfigError(path, err.what());
    }
    const auto allowed = variables_for(cfg.kind, name);
    for (const std::string& v : e.free_variables()) {
      if (!allowed.count(v)) throw ConfigError(path, "unbound variable '" + v + "'");
    }
    cfg.functions[name] = e;
  }
  for (std::string_view name : it->required) {
    if (!cfg.functions.count(std::string(name)))
      throw ConfigError("system.functions." + std::string(name), "missing");
  }
}

void parse_initial(const json& init, RunConfig& cfg) {
  if (!init.is_object()) throw ConfigError("initial", "expected an object");
  const bool cartesian = init.contains("x") || init.contains("y") || init.contains("xdot") ||
                         init.contains("ydot");
  if (cartesian) {
    check_keys(init, "initial", {"x", "y", "xdot", "ydot"});
    if (cfg.kind != SystemKind::Cartesian)
      throw ConfigError("initial", "cartesian initial state given for a polar system");
    CartesianState s;
    for (auto [key, slot] : {std::pair{"x", &s.x}, {"y", &s.y}, {"xdot", &s.xdot}, {"ydot", &s.ydot}}) {
      if (!init.contains(key)) throw ConfigError(std::string("initial.") + key, "missing");
      *slot = number(init[key], std::string("initial.") + key);
    }
    if (s.x == 0.0 && s.y == 0.0) throw ConfigError("initial", "state at the origin");
    cfg.cartesian_initial = s;
  } else {
    check_keys(init, "initial", {"r", "theta", "rdot", "thetadot"});
    if (cfg.kind == SystemKind::Cartesian)
      throw ConfigError("initial", "cartesian systems take x, y, xdot, ydot");
    PolarState s;
    for (auto [key, slot] :
         {std::pair{"r", &s.r}, {"theta", &s.theta}, {"rdot", &s.rdot}, {"thetadot", &s.thetadot}}) {
      if (!init.contains(key)) throw ConfigError(std::string("initial.") + key, "missing");
      *slot = number(init[key], std::string("initial.") + key);
    }
    if (!(s.r > 0.0)) throw ConfigError("initial.r", "must be positive");
    cfg.polar_initial = s;
  }
}

RunConfig from_json(const json& raw) {
  json doc = raw;
  if (!doc.is_object()) throw ConfigError("<root>", "expected an object");
  RunConfig cfg;
  if (doc.contains("preset")) {
    if (!doc["preset"].is_string()) throw ConfigError("preset", "expected a string");
    cfg.preset = doc["preset"].get<std::string>();
    json base = json::parse(preset_json(cfg.preset));
    json overrides = doc;
    overrides.erase("preset");
    base.merge_patch(overrides);
    doc = std::move(base);
  }
  check_keys(doc, "", {"mode", "system", "initial", "t_span", "theta_span", "tolerances", "output",
                       "thresholds"});

  if (doc.contains("mode")) {
    if (!doc["mode"].is_string()) throw ConfigError("mode", "expected a string");
    const std::string mode = doc["mode"].get<std::string>();
    if (mode != "simulate" && mode != "linearize" && mode != "reconstruct" && mode != "validate")
      throw ConfigError("mode", "unknown mode '" + mode + "'");
    cfg.mode = mode;
  }
  if (!doc.contains("system")) throw ConfigError("system", "missing");
  parse_system(doc["system"], cfg);

  if (!doc.contains("initial")) throw ConfigError("initial", "missing");
  parse_initial(doc["initial"], cfg);

  if (!doc.contains("t_span")) throw ConfigError("t_span", "missing");
  std::tie(cfg.t0, cfg.t1) = span(doc["t_span"], "t_span");
  if (cfg.polar_initial) cfg.polar_initial->t = cfg.t0;
  if (cfg.cartesian_initial) cfg.cartesian_initial->t = cfg.t0;

  if (doc.contains("theta_span")) {
    auto [a, b] = span(doc["theta_span"], "theta_span");
    if (a > b) std::swap(a, b);
    cfg.theta_span = Interval{a, b};
  }

  if (doc.contains("tolerances")) {
    const json& tol = doc["tolerances"];
    check_keys(tol, "tolerances", {"rel", "abs", "max_step"});
    if (tol.contains("rel")) cfg.rel_tol = number(tol["rel"], "tolerances.rel");
    if (tol.contains("abs")) cfg.abs_tol = number(tol["abs"], "tolerances.abs");
    if (tol.contains("max_step")) cfg.max_step = number(tol["max_step"], "tolerances.max_step");
    if (!(cfg.rel_tol > 0.0)) throw ConfigError("tolerances.rel", "must be positive");
    if (!(cfg.abs_tol > 0.0)) throw ConfigError("tolerances.abs", "must be positive");
    if (cfg.max_step < 0.0) throw ConfigError("tolerances.max_step", "must not be negative");
  }

  if (doc.contains("output")) {
    const json& out = doc["output"];
    check_keys(out, "output", {"samples"});
    if (out.contains("samples")) {
      if (!out["samples"].is_number_integer() || out["samples"].get<long long>() < 2)
        throw ConfigError("output.samples", "expected an integer >= 2");
      cfg.samples = out["samples"].get<std::size_t>();
    }
  }

  if (doc.contains("thresholds")) {
    const json& th = doc["thresholds"];
    check_keys(th, "thresholds", {"drift", "round_trip", "compatibility"});
    if (th.contains("drift")) cfg.thresholds.drift = number(th["drift"], "thresholds.drift");
    if (th.contains("round_trip"))
      cfg.thresholds.round_trip = number(th["round_trip"], "thresholds.round_trip");
    if (th.contains("compatibility"))
      cfg.thresholds.compatibility = number(th["compatibility"], "thresholds.compatibility");
  }
  return cfg;
}

}  // namespace

std::string to_string(SystemKind kind) {
  for (const KindInfo& k : kinds())
    if (k.kind == kind) return std::string(k.name);
  return "unknown";
}

bool is_linearizable(SystemKind kind) {
  return kind == SystemKind::Linearizable || kind == SystemKind::Kepler ||
         kind == SystemKind::Winternitz || kind == SystemKind::FreeMotion;
}

RunConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& err) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + err.what());
  }
  return from_json(doc);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [name, text] : kPresets) out.push_back(name);
  return out;
}

std::string preset_json(std::string_view name) {
  const auto it = kPresets.find(name);
  if (it == kPresets.end()) throw ConfigError("preset", "unknown preset '" + std::string(name) + "'");
  return it->second;
}

namespace {

Expression fold_G(const Expression& omega_sq, const Expression& G) {
  if (G.is_zero()) return omega_sq;
  const Expression term = G / expr::pow(expr::var("r"), expr::num(3.0));
  return omega_sq.is_zero() ? term : omega_sq + term;
}

}  // namespace

ResolvedSystem resolve(const RunConfig& cfg) {
  const auto fn = [&](const char* name) { return cfg.functions.at(name); };
  const PolarState s0 = cfg.polar_initial ? *cfg.polar_initial
                        : cfg.cartesian_initial ? to_polar(*cfg.cartesian_initial)
                                                : PolarState{};
  switch (cfg.kind) {
    case SystemKind::Cartesian: {
      CartesianSpec spec{fn("f"), fn("g"), fn("omega_sq")};
      const PolarSpec polar = polar_from_cartesian(spec);
      return {cfg.kind, PolarSystem(polar), std::nullopt, spec, polar.omega_sq, s0,
              cfg.cartesian_initial};
    }
    case SystemKind::Polar: {
      PolarSpec spec{fn("F"), fn("V"), fn("omega_sq")};
      return {cfg.kind, PolarSystem(spec), std::nullopt, std::nullopt, spec.omega_sq, s0,
              std::nullopt};
    }
    case SystemKind::Linearizable: {
      LinearizableSpec spec{fn("rho"), fn("A"), fn("B"), fn("C"), fn("F"), fn("V")};
      if (auto it = cfg.functions.find("omega_sq"); it != cfg.functions.end()) {
        return {cfg.kind, PolarSystem(PolarSpec{spec.F, spec.V, it->second}), spec, std::nullopt,
                it->second, s0, std::nullopt};
      }
      return {cfg.kind, PolarSystem(spec), spec, std::nullopt, frequency_from_linearizable(spec),
              s0, std::nullopt};
    }
    case SystemKind::Kepler:
    case SystemKind::Winternitz: {
      const KeplerErmakovSpec spec = cfg.kind == SystemKind::Kepler
                                         ? KeplerErmakovSpec{fn("F"), fn("G"), fn("V")}
                                         : winternitz_system(cfg.winternitz);
      return {cfg.kind, PolarSystem(spec), as_linearizable(spec), std::nullopt,
              fold_G(expr::num(0.0), spec.G), s0, std::nullopt};
    }
    case SystemKind::FreeMotion: {
      const FreeMotionSystem fm = free_motion_system(fn("f"), fn("rho"));
      return {cfg.kind, PolarSystem(fm.polar), fm.polar, fm.cartesian,
              polar_from_cartesian(fm.cartesian).omega_sq, s0, std::nullopt};
    }
  }
  throw ConfigError("system.kind", "unhandled kind");
}

IntegratorConfig integrator_config(const RunConfig& cfg) {
  IntegratorConfig ic;
  ic.rel_tol = cfg.rel_tol;
  ic.abs_tol = cfg.abs_tol;
  if (cfg.max_step > 0.0) ic.max_step = cfg.max_step;
  ic.t_start = cfg.t0;
  ic.t_end = cfg.t1;
  return ic;
}

}  // namespace ermakov::cli
