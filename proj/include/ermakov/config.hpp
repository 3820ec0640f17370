#pragma once

// Run configuration for the command-line front end.
//
// JSON layout (every key optional unless the system kind needs it):
//   {
//     "preset": "winternitz-default",      // base config, other keys merge over it
//     "mode": "simulate",                  // must match the command when given
//     "system": {
//       "kind": "cartesian|polar|linearizable|kepler|winternitz|free_motion",
//       "functions": { "<name>": "<expression>", ... },
//       "params": { "<name>": <number>, ... }
//     },
//     "initial": { "r", "theta", "rdot", "thetadot" } or { "x", "y", "xdot", "ydot" },
//     "t_span": [t0, t1],
//     "theta_span": [lo, hi],
//     "tolerances": { "rel", "abs", "max_step" },
//     "output": { "samples" },
//     "thresholds": { "drift", "round_trip", "compatibility" }
//   }
// Numbers may also be given as constant expressions such as "pi/2".

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ermakov/linearize.hpp"
#include "ermakov/model.hpp"

namespace ermakov::cli {

enum class SystemKind { Cartesian, Polar, Linearizable, Kepler, Winternitz, FreeMotion };

std::string to_string(SystemKind kind);

/// True for the kinds the linearized pipeline accepts.
bool is_linearizable(SystemKind kind);

struct Thresholds {
  double drift = 1e-6;
  double round_trip = 1e-5;
  double compatibility = 1e-9;
};

struct RunConfig {
  std::string preset;
  std::optional<std::string> mode;
  SystemKind kind = SystemKind::Polar;
  std::map<std::string, Expression> functions;  // parameters already bound
  std::map<std::string, double> params;
  WinternitzParams winternitz;
  std::optional<PolarState> polar_initial;
  std::optional<CartesianState> cartesian_initial;
  double t0 = 0.0;
  double t1 = 1.0;
  std::optional<Interval> theta_span;
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  double max_step = 0.0;  // 0: unlimited
  std::size_t samples = 201;
  Thresholds thresholds;
};

/// Parses and validates JSON text. Throws ConfigError with the field path.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);

std::vector<std::string> preset_names();
/// JSON text of a built-in preset; throws ConfigError for unknown names.
std::string preset_json(std::string_view name);

/// The system described by a config, in every representation it admits.
struct ResolvedSystem {
  SystemKind kind = SystemKind::Polar;
  PolarSystem polar;
  std::optional<LinearizableSpec> linearizable;
  std::optional<CartesianSpec> cartesian;
  /// omega^2 the simulated system actually uses, with G/r^2 folded in as
  /// G/r^3 so it can be compared against the linearizable family.
  Expression effective_omega_sq;
  PolarState initial;
  std::optional<CartesianState> cartesian_initial;
};

ResolvedSystem resolve(const RunConfig& cfg);

IntegratorConfig integrator_config(const RunConfig& cfg);

}  // namespace ermakov::cli
