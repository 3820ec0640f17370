#pragma once

// The four front-end commands. Each writes its files into `out_dir` and
// returns the process exit status: 0 success or pass, 1 validation failure
// (bad config, failed checks), 2 runtime or domain error. Partial output is
// kept when a run stops early.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ermakov/config.hpp"

namespace ermakov::cli {

inline constexpr int kExitSuccess = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;

struct CommandOutcome {
  int exit_code = kExitSuccess;
  std::string message;
  std::vector<std::filesystem::path> files;
};

/// trajectory.csv (t,r,theta,rdot,thetadot,I) and summary.json.
CommandOutcome cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// linear.csv (theta,p2,p1,p0,rhs,psi) over the working interval and linear.json.
CommandOutcome cmd_linearize(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// reconstruct.csv (t,theta,r,psi) from the linearized route.
CommandOutcome cmd_reconstruct(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// report.json with drift, round-trip and compatibility metrics.
CommandOutcome cmd_validate(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Dispatches by name; errors thrown by the commands are mapped to exit codes.
CommandOutcome run_command(std::string_view name, const RunConfig& cfg,
                           const std::filesystem::path& out_dir);

/// 17 significant digits, as written to every CSV.
std::string format_double(double x);

}  // namespace ermakov::cli
