// hcd: batch front end for the co-design library.
//
//   hcd <command> [--config FILE] [--out DIR] [--seed N] [--<key> VALUE ...]
//
// Every config key is also a flag. Values from --config override flags.

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "haptic_codesign/cli/commands.hpp"

namespace {

struct Invocation {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::map<std::string, std::string> flags;
  bool quiet = false;
};

const char* describe(const std::string& command) {
  if (command == "tradeoff") return "build the prediction error table from generated trajectories";
  if (command == "optimize") return "minimum bandwidth and bits per task (two-level search)";
  if (command == "allocate") return "multi-user admission, task-oriented vs task-agnostic";
  if (command == "simulate") return "Monte Carlo check of the bound and predictor placement";
  return "error components against delay bound, bits and bandwidth";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-oriented prediction and communication co-design for haptic links"};
  app.require_subcommand(1);

  const std::vector<std::string> commands{"tradeoff", "optimize", "allocate", "simulate", "sweep"};
  std::map<std::string, Invocation> inv;
  for (const std::string& name : commands) {
    Invocation& in = inv[name];
    CLI::App* sub = app.add_subcommand(name, describe(name));
    sub->add_option("--config", in.config_path, "key = value file, overrides flags");
    sub->add_option("--out", in.out_dir, "output directory");
    sub->add_option("--seed", in.seed, "random seed (required by tradeoff and simulate)");
    sub->add_flag("--quiet", in.quiet, "no progress lines on stderr");
    const hcd::cli::RunConfig schema = hcd::cli::make_config(name);
    for (const hcd::cli::KeySpec& key : schema.schema()) {
      sub->add_option("--" + key.name, in.flags[key.name], key.help)->default_str(key.default_value);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? hcd::cli::kExitOk : hcd::cli::kExitConfig;
  }

  for (const std::string& name : commands) {
    CLI::App* sub = app.get_subcommand(name);
    if (!sub->parsed()) continue;
    Invocation& in = inv[name];
    try {
      hcd::cli::RunConfig cfg = hcd::cli::make_config(name);
      for (const auto& [key, value] : in.flags) {
        if (sub->count("--" + key) > 0) cfg.set(key, value);
      }
      if (!in.config_path.empty()) cfg.load_file(in.config_path);
      hcd::cli::CommandContext ctx;
      ctx.out_dir = in.out_dir;
      ctx.seed = in.seed;
      ctx.log = in.quiet ? nullptr : &std::cerr;
      const hcd::cli::CommandResult r = hcd::cli::run_command(cfg, ctx);
      for (const auto& f : r.files) {
        if (!in.quiet) std::cerr << "wrote " << f.string() << '\n';
      }
      return r.exit_code;
    } catch (const hcd::cli::ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return hcd::cli::kExitConfig;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << '\n';
      return hcd::cli::kExitConfig;
    }
  }
  return hcd::cli::kExitConfig;
}
