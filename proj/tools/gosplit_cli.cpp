// gosplit: run, validate and trace DNN-splitting experiments.
//
// Exit codes: 0 ok, 1 parse error, 2 semantic error, 3 runtime failure.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "gosplit/error.hpp"
#include "gosplit/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kParseError = 1, kSemanticError = 2, kRuntimeError = 3 };

constexpr const char* kOutputEnv = "GOSPLIT_OUTPUT_DIR";

std::filesystem::path output_dir(const gosplit::ExperimentConfig& cfg) {
  if (const char* env = std::getenv(kOutputEnv); env && *env) return env;
  return cfg.output_dir;
}

// Loads and validates; returns a non-zero exit code on failure.
int load(const std::string& path, gosplit::ExperimentConfig& cfg, bool verbose) {
  try {
    cfg = gosplit::load_config(path);
  } catch (const gosplit::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParseError;
  }
  const auto diags = gosplit::validate_config(cfg);
  for (const auto& d : diags) std::cerr << "error: " << d.location << ": " << d.message << '\n';
  if (!diags.empty()) return kSemanticError;
  if (verbose) std::cout << path << ": ok\n";
  return kOk;
}

std::pair<std::size_t, std::size_t> parse_cell(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw gosplit::ConfigError("--cell expects `i,j`");
  try {
    return {std::stoul(text.substr(0, comma)), std::stoul(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw gosplit::ConfigError("--cell expects two non-negative integers `i,j`");
  }
}

int cmd_run(const std::string& path) {
  gosplit::ExperimentConfig cfg;
  if (int rc = load(path, cfg, false)) return rc;
  const auto dir = output_dir(cfg);
  const auto report = gosplit::run_experiment(cfg);
  gosplit::write_report(cfg, report, dir);

  for (const auto& cell : report.cells) {
    const auto* dyn = cell.pick("dynamic");
    fmt::print("G_avg={:.2f} PL={:g} dB:", cell.g_avg, cell.path_loss_db);
    for (const auto& sel : cell.selected) {
      if (!sel.run) {
        fmt::print("  {}=INFEASIBLE", sel.label);
        continue;
      }
      const auto& r = cell.runs[*sel.run];
      fmt::print("  {}={:.4g} J", sel.label, r.avg_energy);
      if (dyn && sel.label != "dynamic" && r.avg_energy > 0.0) {
        fmt::print(" ({:+.1f}%)", 100.0 * (1.0 - dyn->avg_energy / r.avg_energy));
      }
    }
    fmt::print("\n");
  }
  fmt::print("results written to {}\n", dir.string());
  return kOk;
}

int cmd_trace(const std::string& path, const std::string& policy_text, const std::string& cell_text,
              std::optional<double> v) {
  gosplit::ExperimentConfig cfg;
  if (int rc = load(path, cfg, false)) return rc;
  gosplit::Policy policy;
  std::pair<std::size_t, std::size_t> cell;
  try {
    policy = gosplit::Policy::parse(policy_text);
    cell = parse_cell(cell_text);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSemanticError;
  }
  const auto result = gosplit::run_traced(cfg, policy, cell.first, cell.second, v);

  const auto dir = output_dir(cfg);
  std::filesystem::create_directories(dir);
  std::string name = policy.name();
  for (auto& c : name) {
    if (c == ':') c = '_';
  }
  const auto file = dir / fmt::format("trace_{}_{}_{}.csv", name, cell.first, cell.second);
  std::ofstream out(file, std::ios::binary);
  gosplit::write_trace_csv(out, result.trace);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  fmt::print("{} V={:g}: energy={:.6g} J delay={:.6g} s accuracy={:.4f} avg_sp={:.3f} -> {}\n",
             result.policy, result.v, result.avg_energy, result.avg_delay, result.avg_accuracy,
             result.avg_sp, file.string());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Goal-oriented DNN splitting: drift-plus-penalty control and simulation"};
  app.require_subcommand(1);

  std::string config;
  auto* run = app.add_subcommand("run", "Full sweep over targets, path losses, policies and V");
  run->add_option("config", config, "YAML configuration")->required();

  auto* validate = app.add_subcommand("validate", "Check a configuration and report every problem");
  validate->add_option("config", config, "YAML configuration")->required();

  std::string policy = "dynamic";
  std::string cell = "0,0";
  std::optional<double> v;
  auto* trace = app.add_subcommand("trace", "Single run with a per-slot trace");
  trace->add_option("config", config, "YAML configuration")->required();
  trace->add_option("--policy", policy, "dynamic | flc | fixed_sp:<k> | fixed_snr:<dB> | accuracy_unaware");
  trace->add_option("--cell", cell, "i,j = index into sweep.g_avg, sweep.path_loss_db");
  trace->add_option("--v", v, "Use this V instead of selecting one from the sweep");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kParseError;
  }

  try {
    if (*run) return cmd_run(config);
    if (*validate) {
      gosplit::ExperimentConfig cfg;
      return load(config, cfg, true);
    }
    if (*trace) return cmd_trace(config, policy, cell, v);
  } catch (const gosplit::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSemanticError;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}
