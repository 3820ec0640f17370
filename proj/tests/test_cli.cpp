#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "ermakov/commands.hpp"
#include "ermakov/config.hpp"
#include "ermakov/error.hpp"
#include "oracles.hpp"

using namespace ermakov;
using namespace ermakov::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

// Runs the installed binary and returns its exit status.
int run_cli(const std::string& args, const fs::path& log = {}) {
  std::string cmd = std::string(ERMAKOV_CLI_PATH) + " " + args;
  cmd += log.empty() ? " 2>/dev/null" : " 2>" + log.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_error_path(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}

const char* kUsualErmakov = R"json({
  "system": {"kind": "linearizable",
             "functions": {"rho": "cos(t)", "A": "0", "B": "0", "C": "0",
                           "F": "0.5", "V": "0.2*sin(theta)^2", "omega_sq": "1"}},
  "initial": {"r": 1.2, "theta": 0.4, "rdot": 0.1, "thetadot": 1.1},
  "t_span": [0, 1]
})json";

}  // namespace

TEST_CASE("presets parse and resolve") {
  for (const std::string& name : preset_names()) {
    const RunConfig cfg = parse_config(preset_json(name));
    CHECK_NOTHROW(resolve(cfg));
  }
  CHECK(preset_names().size() == 3);
  CHECK_THROWS_AS(preset_json("nope"), ConfigError);
}

TEST_CASE("validation errors name the field") {
  CHECK(config_error_path(R"({"system": {"kind": "polar",
      "functions": {"F": "0", "omega_sq": "1"}},
      "initial": {"r": 1, "theta": 0.5, "rdot": 0, "thetadot": 1}})") == "system.functions.V");
  CHECK(config_error_path(R"({"preset": "winternitz-default", "t_span": [0, 0]})") == "t_span");
  CHECK(config_error_path(R"({"preset": "winternitz-default", "colour": 1})") == "colour");
  CHECK(config_error_path(R"({"preset": "winternitz-default", "tolerances": {"rel": -1}})") ==
        "tolerances.rel");
  CHECK(config_error_path(R"({"system": {"kind": "polar",
      "functions": {"F": "0", "V": "r", "omega_sq": "1"}},
      "initial": {"r": 1, "theta": 0.5, "rdot": 0, "thetadot": 1}})") == "system.functions.V");
  CHECK_FALSE(config_error_path("{not json").empty());
}

TEST_CASE("numbers may be constant expressions") {
  const RunConfig cfg = parse_config(preset_json("winternitz-default"));
  REQUIRE(cfg.polar_initial);
  CHECK(cfg.polar_initial->theta == doctest::Approx(oracle::kPi / 2));
}

TEST_CASE("simulate writes the trajectory and a passing summary") {
  const fs::path dir = oracle::scratch_dir("cli_simulate");
  const CommandOutcome out =
      run_command("simulate", parse_config(preset_json("winternitz-default")), dir);
  REQUIRE(out.exit_code == kExitSuccess);
  const auto t = oracle::csv_column(dir / "trajectory.csv", "t");
  REQUIRE(t.size() == 201);
  CHECK(std::stod(t.back()) == doctest::Approx(10.0));
  const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(j["drift"]["max"].get<double>() <= 1e-6);
  // 17 significant digits.
  CHECK(oracle::csv_column(dir / "trajectory.csv", "r")[3].size() >= 17);
}

TEST_CASE("linearize rhs columns") {
  const fs::path dir = oracle::scratch_dir("cli_linearize");
  REQUIRE(run_command("linearize", parse_config(kUsualErmakov), dir).exit_code == 0);
  for (const auto& cell : oracle::csv_column(dir / "linear.csv", "rhs")) CHECK(cell == "0");

  REQUIRE(run_command("linearize", parse_config(R"json({
    "system": {"kind": "kepler", "functions": {"F": "0.5", "G": "2 + cos(theta)", "V": "0"}},
    "initial": {"r": 1, "theta": 0.3, "rdot": 0, "thetadot": 1.5},
    "t_span": [0, 1],
    "theta_span": [0.3, 2.0]
  })json"), dir).exit_code == 0);
  const auto theta = oracle::csv_column(dir / "linear.csv", "theta");
  const auto rhs = oracle::csv_column(dir / "linear.csv", "rhs");
  REQUIRE(theta.size() == rhs.size());
  for (std::size_t i = 0; i < theta.size(); ++i)
    CHECK(std::stod(rhs[i]) == doctest::Approx(2 + std::cos(std::stod(theta[i]))).epsilon(1e-15));
}

TEST_CASE("angles beyond a turning point are refused") {
  const fs::path dir = oracle::scratch_dir("cli_turning");
  const CommandOutcome out = run_command("linearize", parse_config(R"json({
    "system": {"kind": "linearizable",
               "functions": {"rho": "1", "A": "0", "B": "0", "C": "0", "F": "0",
                             "V": "2*sin(theta)^2"}},
    "initial": {"r": 1, "theta": 0, "rdot": 0, "thetadot": 1},
    "t_span": [0, 1],
    "theta_span": [0, 1]
  })json"), dir);
  CHECK(out.exit_code == kExitRuntime);
  CHECK(out.message.find("theta = 0.5235987") != std::string::npos);
}

TEST_CASE("reconstruct matches simulate on uniform rotation") {
  const fs::path dir = oracle::scratch_dir("cli_reconstruct");
  const RunConfig cfg = parse_config(preset_json("uniform-rotation"));
  REQUIRE(run_command("reconstruct", cfg, dir).exit_code == 0);
  const auto t = oracle::csv_column(dir / "reconstruct.csv", "t");
  const auto theta = oracle::csv_column(dir / "reconstruct.csv", "theta");
  for (std::size_t i = 0; i < t.size(); ++i)
    CHECK(std::stod(theta[i]) == doctest::Approx(std::stod(t[i])).epsilon(1e-10));
}

TEST_CASE("validate passes on presets and fails on a corrupted A") {
  for (const char* preset : {"winternitz-default", "uniform-rotation"}) {
    const fs::path dir = oracle::scratch_dir(std::string("cli_validate_") + preset);
    const CommandOutcome out = run_command("validate", parse_config(preset_json(preset)), dir);
    CHECK_MESSAGE(out.exit_code == kExitSuccess, preset);
    CHECK(nlohmann::json::parse(slurp(dir / "report.json"))["pass"].get<bool>());
  }

  const fs::path ok_dir = oracle::scratch_dir("cli_validate_usual");
  CHECK(run_command("validate", parse_config(kUsualErmakov), ok_dir).exit_code == kExitSuccess);

  std::string corrupted = kUsualErmakov;
  const std::string plain_A = "\"A\": \"0\"";
  corrupted.replace(corrupted.find(plain_A), plain_A.size(), "\"A\": \"0.5*sin(theta)\"");
  const fs::path dir = oracle::scratch_dir("cli_validate_corrupt");
  CHECK(run_command("validate", parse_config(corrupted), dir).exit_code == kExitValidation);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK_FALSE(report["pass"].get<bool>());
  bool compat_failed = false;
  for (const auto& c : report["checks"])
    if (c["name"] == "compatibility_residual") compat_failed = !c["pass"].get<bool>();
  CHECK(compat_failed);
}

TEST_CASE("mode must match the command") {
  RunConfig cfg = parse_config(preset_json("uniform-rotation"));
  cfg.mode = "simulate";
  CHECK(run_command("linearize", cfg, oracle::scratch_dir("cli_mode")).exit_code ==
        kExitValidation);
}

TEST_CASE("binary exit codes, logging and determinism") {
  const fs::path dir = oracle::scratch_dir("cli_binary");
  CHECK(run_cli("simulate --config preset:winternitz-default --out " + (dir / "a").string()) == 0);
  CHECK(run_cli("simulate --config preset:winternitz-default --out " + (dir / "b").string()) == 0);
  CHECK(slurp(dir / "a" / "trajectory.csv") == slurp(dir / "b" / "trajectory.csv"));

  const fs::path bad = write_config(dir, R"({"preset": "winternitz-default", "t_span": [0, 0]})");
  CHECK(run_cli("simulate --config " + bad.string() + " --out " + dir.string()) == 1);
  CHECK(run_cli("simulate --out " + dir.string()) == 1);
  CHECK(run_cli("linearize --config preset:no-such-preset --out " + dir.string()) == 1);

  const fs::path log = dir / "log.txt";
  setenv("ERMAKOV_LOG", "info", 1);
  run_cli("linearize --config preset:uniform-rotation --out " + dir.string(), log);
  unsetenv("ERMAKOV_LOG");
  CHECK(slurp(log).find("linearize:") != std::string::npos);
  run_cli("linearize --config preset:uniform-rotation --out " + dir.string(), log);
  CHECK(slurp(log).find("linearize:") == std::string::npos);
}
