#include "ermakov/commands.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "ermakov/error.hpp"
#include "ermakov/integrate.hpp"
#include "ermakov/invariant.hpp"
#include "ermakov/linearize.hpp"

namespace ermakov::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, std::initializer_list<const char*> header) : out_(path) {
    if (!out_) throw Error("cannot write " + path.string());
    bool first = true;
    for (const char* h : header) {
      out_ << (first ? "" : ",") << h;
      first = false;
    }
    out_ << '\n';
  }
  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      out_ << (first ? "" : ",") << format_double(v);
      first = false;
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k)
    out[k] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  out.front() = a;
  out.back() = b;
  return out;
}

double eval_t(const Expression& e, double t) {
  if (e.is_constant()) return e.value();
  return e.evaluate({{"t", t}});
}

const LinearizableSpec& require_linearizable(const ResolvedSystem& sys) {
  if (!sys.linearizable)
    throw ConfigError("system.kind",
                      "kind " + to_string(sys.kind) + " has no linearized representation");
  return *sys.linearizable;
}

struct Simulation {
  Trajectory traj;
  DriftStats drift;
  std::vector<double> times;
  std::vector<PolarState> states;
  std::vector<double> invariants;
};

Simulation simulate(const RunConfig& cfg, const ResolvedSystem& sys) {
  const IntegratorConfig ic = integrator_config(cfg);
  Simulation sim;
  if (sys.kind == SystemKind::Cartesian) {
    sim.traj = integrate_cartesian(CartesianSystem(*sys.cartesian), *sys.cartesian_initial, ic);
  } else {
    PolarEventOptions opts;
    if (sys.linearizable && !sys.linearizable->rho.is_constant()) opts.rho = sys.linearizable->rho;
    sim.traj = integrate_polar(sys.polar, sys.initial, ic, opts);
  }
  sim.times = linspace(cfg.t0, sim.traj.t_last(), cfg.samples);
  for (double t : sim.times) {
    if (sys.kind == SystemKind::Cartesian) {
      const CartesianState c = cartesian_state_at(sim.traj, t);
      sim.states.push_back(to_polar(c));
      sim.invariants.push_back(
          lewis_ray_reid_cartesian(c, sys.cartesian->f, sys.cartesian->g).I);
    } else {
      sim.states.push_back(polar_state_at(sim.traj, t));
      sim.invariants.push_back(lewis_ray_reid_polar(sim.states.back(), sys.polar.V()).I);
    }
  }
  if (sys.kind == SystemKind::Cartesian) {
    // Drift straight from the sampled invariant values.
    const double I0 = sim.invariants.front();
    double sum = 0.0;
    sim.drift.I0 = I0;
    for (double I : sim.invariants) {
      const double d = std::abs(I - I0) / (1.0 + std::abs(I0));
      sim.drift.series.push_back(d);
      sim.drift.max = std::max(sim.drift.max, d);
      sum += d * d;
    }
    sim.drift.rms = std::sqrt(sum / static_cast<double>(sim.invariants.size()));
  } else {
    sim.drift = monitor_invariant(sim.traj, sys.polar.V());
  }
  return sim;
}

json events_json(const Trajectory& traj) {
  json out = json::array();
  for (const Event& e : traj.events)
    out.push_back({{"kind", to_string(e.kind)}, {"label", e.label}, {"t", e.t},
                   {"terminal", e.terminal}});
  return out;
}

PipelineConfig pipeline_config(const RunConfig& cfg) {
  PipelineConfig pc;
  pc.theta_span = cfg.theta_span;
  return pc;
}

}  // namespace

CommandOutcome cmd_simulate(const RunConfig& cfg, const fs::path& out_dir) {
  const ResolvedSystem sys = resolve(cfg);
  fs::create_directories(out_dir);
  spdlog::info("simulate: kind={} t=[{}, {}]", to_string(cfg.kind), cfg.t0, cfg.t1);
  const Simulation sim = simulate(cfg, sys);

  CommandOutcome outcome;
  const fs::path csv = out_dir / "trajectory.csv";
  CsvWriter w(csv, {"t", "r", "theta", "rdot", "thetadot", "I"});
  for (std::size_t k = 0; k < sim.times.size(); ++k) {
    const PolarState& s = sim.states[k];
    w.row({sim.times[k], s.r, s.theta, s.rdot, s.thetadot, sim.invariants[k]});
  }
  outcome.files.push_back(csv);

  json summary = {{"command", "simulate"},
                  {"kind", to_string(cfg.kind)},
                  {"termination", to_string(sim.traj.termination)},
                  {"message", sim.traj.message},
                  {"t_start", cfg.t0},
                  {"t_final", sim.traj.t_last()},
                  {"accepted_steps", sim.traj.accepted_steps},
                  {"rejected_steps", sim.traj.rejected_steps},
                  {"events", events_json(sim.traj)},
                  {"drift", {{"I0", sim.drift.I0}, {"max", sim.drift.max}, {"rms", sim.drift.rms}}},
                  {"invariant_convention",
                   sys.kind == SystemKind::Cartesian || sys.kind == SystemKind::FreeMotion
                       ? kBasePointConvention
                       : kDirectVConvention}};
  const fs::path js = out_dir / "summary.json";
  write_json(js, summary);
  outcome.files.push_back(js);

  spdlog::info("simulate: {} after {} steps, max drift {:.3e}", to_string(sim.traj.termination),
               sim.traj.accepted_steps, sim.drift.max);
  if (!sim.traj.completed()) {
    outcome.exit_code = kExitRuntime;
    outcome.message = "integration stopped early at t = " + format_double(sim.traj.t_last()) +
                      ": " + sim.traj.message;
  }
  return outcome;
}

CommandOutcome cmd_linearize(const RunConfig& cfg, const fs::path& out_dir) {
  const ResolvedSystem sys = resolve(cfg);
  const LinearizableSpec& spec = require_linearizable(sys);
  fs::create_directories(out_dir);

  const PolarState& s0 = sys.initial;
  const InvariantValue I = lewis_ray_reid_polar(s0, spec.V);
  const int branch = branch_sign_of(s0);
  Interval window;
  if (cfg.theta_span) {
    window = *cfg.theta_span;
    if (!window.contains(s0.theta))
      throw ConfigError("theta_span", "must contain the initial angle");
  } else {
    const int direction = branch * (cfg.t1 > cfg.t0 ? 1 : -1);
    window = working_interval(spec.V, I, s0.theta, direction, PipelineConfig{}.max_theta_span)
                 .interval;
  }
  spdlog::info("linearize: I={} branch={} theta=[{}, {}]", I.I, branch, window.lo, window.hi);

  const LinearODE ode = build_linear_ode(spec, I, window, branch);
  const PsiInitialData d = psi_initial_data(spec.rho, s0);
  const std::array<double, 2> grid{window.lo, window.hi};
  const LinearSolution sol = solve_linear(ode, s0.theta, d.psi, d.dpsi, grid);

  CommandOutcome outcome;
  const fs::path csv = out_dir / "linear.csv";
  CsvWriter w(csv, {"theta", "p2", "p1", "p0", "rhs", "psi"});
  for (double theta : linspace(window.lo, window.hi, cfg.samples)) {
    const LinearODE::Coefficients c = ode.at(theta);
    w.row({theta, c.p2, c.p1, c.p0, c.rhs, sol.psi(theta)});
  }
  outcome.files.push_back(csv);

  const fs::path js = out_dir / "linear.json";
  write_json(js, {{"command", "linearize"},
                  {"kind", to_string(cfg.kind)},
                  {"I", I.I},
                  {"invariant_convention", I.convention_note},
                  {"branch_sign", branch},
                  {"theta0", s0.theta},
                  {"theta_window", {window.lo, window.hi}},
                  {"c1", sol.c1()},
                  {"c2", sol.c2()},
                  {"homogeneous", ode.homogeneous()}});
  outcome.files.push_back(js);
  return outcome;
}

CommandOutcome cmd_reconstruct(const RunConfig& cfg, const fs::path& out_dir) {
  const ResolvedSystem sys = resolve(cfg);
  const LinearizableSpec& spec = require_linearizable(sys);
  fs::create_directories(out_dir);

  const LinearizedPipeline pipe(spec, sys.initial, cfg.t1, pipeline_config(cfg));
  const double forward = cfg.t1 > cfg.t0 ? 1.0 : -1.0;
  const double t_end = (pipe.covered_until() - cfg.t1) * forward < 0.0 ? pipe.covered_until()
                                                                         : cfg.t1;
  spdlog::info("reconstruct: I={} theta window [{}, {}], t up to {}", pipe.invariant().I,
               pipe.window().interval.lo, pipe.window().interval.hi, t_end);

  CommandOutcome outcome;
  const fs::path csv = out_dir / "reconstruct.csv";
  CsvWriter w(csv, {"t", "theta", "r", "psi"});
  for (double t : linspace(cfg.t0, t_end, cfg.samples)) {
    const double theta = pipe.theta_at(t);
    const double psi = pipe.psi(theta);
    w.row({t, theta, eval_t(spec.rho, t) / psi, psi});
  }
  outcome.files.push_back(csv);
  if (t_end != cfg.t1) {
    outcome.exit_code = kExitRuntime;
    outcome.message = "angle window only reaches t = " + format_double(t_end) +
                      " (turning point or escape to infinity)";
  }
  return outcome;
}

CommandOutcome cmd_validate(const RunConfig& cfg, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  json report = {{"command", "validate"}, {"kind", to_string(cfg.kind)}};
  json checks = json::array();
  json errors = json::array();
  bool pass = true;
  auto check = [&](const std::string& name, double value, double threshold) {
    const bool ok = std::isfinite(value) && value <= threshold;
    pass = pass && ok;
    checks.push_back({{"name", name}, {"value", value}, {"threshold", threshold}, {"pass", ok}});
  };
  auto fail = [&](const std::string& step, const std::string& what) {
    pass = false;
    errors.push_back({{"step", step}, {"error", what}});
    spdlog::warn("validate: {} failed: {}", step, what);
  };

  const ResolvedSystem sys = resolve(cfg);
  const LinearizableSpec& spec = require_linearizable(sys);

  std::optional<Simulation> sim;
  try {
    sim = simulate(cfg, sys);
    report["drift"] = {{"I0", sim->drift.I0}, {"max", sim->drift.max}, {"rms", sim->drift.rms}};
    report["termination"] = to_string(sim->traj.termination);
    report["events"] = events_json(sim->traj);
    check("invariant_drift", sim->drift.max, cfg.thresholds.drift);
    if (!sim->traj.completed()) fail("simulate", sim->traj.message);
  } catch (const Error& e) {
    fail("simulate", e.what());
  }

  if (sim) {
    try {
      const LinearizedPipeline pipe(spec, sys.initial, cfg.t1, pipeline_config(cfg));
      double err_r = 0.0;
      double err_theta = 0.0;
      const double forward = cfg.t1 > cfg.t0 ? 1.0 : -1.0;
      double t_last = cfg.t0;
      std::size_t compared = 0;
      for (std::size_t k = 0; k < sim->times.size(); ++k) {
        const double t = sim->times[k];
        if ((t - pipe.covered_until()) * forward > 0.0) break;
        const double theta = pipe.theta_at(t);
        const double r = eval_t(spec.rho, t) / pipe.psi(theta);
        err_r = std::max(err_r, std::abs(r - sim->states[k].r));
        err_theta = std::max(err_theta, std::abs(theta - sim->states[k].theta));
        t_last = t;
        ++compared;
      }
      report["round_trip"] = {{"r_sup", err_r},
                              {"theta_sup", err_theta},
                              {"window", {cfg.t0, t_last}},
                              {"samples", compared}};
      check("round_trip_r", err_r, cfg.thresholds.round_trip);
      check("round_trip_theta", err_theta, cfg.thresholds.round_trip);
      if (compared < 2) fail("reconstruct", "linearized route covers no part of the time span");
    } catch (const Error& e) {
      fail("reconstruct", e.what());
    }

    try {
      double worst = 0.0;
      double sum = 0.0;
      for (const PolarState& s : sim->states) {
        const double res = compatibility_residual(sys.effective_omega_sq, spec, s);
        worst = std::max(worst, res);
        sum += res * res;
      }
      report["compatibility"] = {
          {"max", worst},
          {"rms", std::sqrt(sum / static_cast<double>(sim->states.size()))},
          {"samples", sim->states.size()}};
      check("compatibility_residual", worst, cfg.thresholds.compatibility);
    } catch (const Error& e) {
      fail("compatibility", e.what());
    }
  }

  report["checks"] = checks;
  report["errors"] = errors;
  report["pass"] = pass;
  CommandOutcome outcome;
  const fs::path js = out_dir / "report.json";
  write_json(js, report);
  outcome.files.push_back(js);
  if (!pass) {
    outcome.exit_code = kExitValidation;
    outcome.message = "validation failed";
  }
  return outcome;
}

CommandOutcome run_command(std::string_view name, const RunConfig& cfg, const fs::path& out_dir) {
  try {
    if (cfg.mode && *cfg.mode != name)
      throw ConfigError("mode", "config is for '" + *cfg.mode + "', not '" + std::string(name) + "'");
    if (name == "simulate") return cmd_simulate(cfg, out_dir);
    if (name == "linearize") return cmd_linearize(cfg, out_dir);
    if (name == "reconstruct") return cmd_reconstruct(cfg, out_dir);
    if (name == "validate") return cmd_validate(cfg, out_dir);
    return {kExitValidation, "unknown command '" + std::string(name) + "'", {}};
  } catch (const ConfigError& e) {
    return {kExitValidation, e.what(), {}};
  } catch (const std::exception& e) {
    return {kExitRuntime, e.what(), {}};
  }
}

}  // namespace ermakov::cli
