// ermakov: simulate | linearize | reconstruct | validate --config <path> --out <dir>
//
// ERMAKOV_LOG sets the log level (trace, debug, info, warn, error, off).
// --config also accepts "preset:<name>".

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ermakov/commands.hpp"
#include "ermakov/config.hpp"
#include "ermakov/error.hpp"

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("ermakov");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("ERMAKOV_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level == spdlog::level::off && std::string(env) != "off")
      spdlog::warn("ERMAKOV_LOG='{}' not recognised; keeping warn", env);
    else
      spdlog::set_level(level);
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  namespace cli = ermakov::cli;

  CLI::App app{"Numerical lab for generalized Ermakov systems"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  for (const char* name : {"simulate", "linearize", "reconstruct", "validate"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON run config or preset:<name>")->required();
    sub->add_option("--out", out_dir, "output directory")->required();
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kExitSuccess : cli::kExitValidation;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  cli::RunConfig cfg;
  try {
    const std::string prefix = "preset:";
    if (config_path.rfind(prefix, 0) == 0)
      cfg = cli::parse_config(R"({"preset": ")" + config_path.substr(prefix.size()) + R"("})");
    else
      cfg = cli::load_config(config_path);
  } catch (const ermakov::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return cli::kExitValidation;
  }

  const cli::CommandOutcome outcome = cli::run_command(command, cfg, out_dir);
  for (const auto& f : outcome.files) spdlog::info("wrote {}", f.string());
  if (!outcome.message.empty())
    std::cerr << (outcome.exit_code == cli::kExitSuccess ? "" : "error: ") << outcome.message
              << '\n';
  return outcome.exit_code;
}
