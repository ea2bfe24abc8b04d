#pragma once

// Parameter sweeps over accuracy targets, path losses, policies and the DPP
// weight V, with per-cell V selection and CSV artifacts.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gosplit/accuracy.hpp"
#include "gosplit/controller.hpp"
#include "gosplit/model.hpp"
#include "gosplit/simulation.hpp"

namespace gosplit {

// Parsed configuration. Values carry the units named in the config keys;
// dB quantities are converted once, by build_system / environment_for.
struct ExperimentConfig {
  struct Device {
    double f_l_min_hz = 2.0e8;
    double f_l_max_hz = 1.4e9;
    double eta_l = 50.0;
    double kappa = 1.097e-27;
    double p_tx_max_w = 0.3;
  } device;

  struct Server {
    double f_r_max_hz = 4.5e9;
    double eta_r = 2000.0;
  } server;

  struct Radio {
    double n0_dbm_hz = -174.0;
    double noise_figure_db = 5.0;
    double w_max_hz = 1.0e7;
    double rolloff = 0.25;
    std::vector<double> snr_grid_db{-5, -4, -3, -2, 0, 5, 10, 20};
  } radio;

  struct Environment {
    double arrival_rate = 5.0;
    double alpha_floor = 0.0;
  } environment;

  struct Controller {
    double mu = 1.0;
    double lambda_y = 1.0;
    double d_avg_s = 0.05;
  } controller;

  // Empty path selects the built-in MobileNetV2 profile.
  std::string profile_file;
  // Empty path selects the synthetic LUT described by `synth`.
  std::string lut_file;
  SynthShape synth;

  struct Sweep {
    std::vector<double> v;
    std::vector<double> g_avg{0.70, 0.75, 0.80, 0.85};
    std::vector<double> path_loss_db{115, 120, 125};
    // dynamic | flc | bfsp | bfsnr | accuracy_unaware | fixed_sp:<k> | fixed_snr:<dB>
    std::vector<std::string> policies{"dynamic", "flc", "bfsp", "bfsnr", "accuracy_unaware"};
  } sweep;

  struct Run {
    std::size_t slots = 10000;
    std::uint64_t seed = 1;
    double transient_fraction = 0.1;
    double slack = 0.05;                // relative tolerance on delay/accuracy targets
    double stability_threshold = 1e-3;  // bound on Z(N)/N and Y(N)/N
    unsigned threads = 0;               // 0 = hardware concurrency
  } run;

  std::string output_dir = "results";

  // Logarithmic grid from `from` to `to` with `per_decade` points per decade.
  static std::vector<double> log_grid(double from, double to, unsigned per_decade);
  // 19 points, three per decade over [1e-3, 1e3].
  static std::vector<double> default_v_grid();
  ExperimentConfig() : sweep{default_v_grid()} {}
};

// Reads a YAML config. Relative file paths are resolved against the config's
// directory. Throws ParseError on syntax errors, wrong value types and
// unknown keys.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir);

struct Diagnostic {
  std::string location;  // dotted key path, e.g. `device.f_l_min_hz`
  std::string message;
};

// Every violated semantic invariant; empty when the config is usable.
std::vector<Diagnostic> validate_config(const ExperimentConfig& cfg);

SystemParams build_system(const ExperimentConfig& cfg);
AccuracyLUT build_lut(const ExperimentConfig& cfg, const SystemParams& sys);
EnvironmentParams environment_for(const ExperimentConfig& cfg, double path_loss_db);
ControllerState controller_for(const ExperimentConfig& cfg, double g_avg, double v);

// Expands `bfsp` / `bfsnr` into the fixed policies they pick from.
std::vector<Policy> expand_policies(const ExperimentConfig& cfg, const SystemParams& sys);

// A run counts as feasible when its delay (and, unless the policy ignores
// accuracy, its accuracy) meets the target within `slack` and its virtual
// queues satisfy Z(N)/N, Y(N)/N < threshold.
bool is_feasible(const RunResult& r, const Policy& policy, double slack, double stability_threshold);

struct Selection {
  std::string label;               // entry of sweep.policies
  std::optional<std::size_t> run;  // index into CellResult::runs; empty if INFEASIBLE
};

struct CellResult {
  std::size_t g_index = 0;
  std::size_t pl_index = 0;
  double g_avg = 0.0;
  double path_loss_db = 0.0;
  std::vector<RunResult> runs;      // every (policy, V) pair
  std::vector<Policy> run_policy;   // parallel to runs
  std::vector<bool> feasible;       // parallel to runs
  std::vector<Selection> selected;  // one per sweep.policies entry

  const RunResult* pick(const std::string& label) const;
};

struct ExperimentReport {
  std::vector<CellResult> cells;  // row-major over (g_avg, path_loss)

  const CellResult& cell(std::size_t g_index, std::size_t pl_index) const;
};

ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Runs one policy in one cell: V sweep, selection, then a traced rerun at the
// chosen V (or at `v_override`).
RunResult run_traced(const ExperimentConfig& cfg, const Policy& policy, std::size_t g_index,
                     std::size_t pl_index, std::optional<double> v_override);

// Writes cell_<i>_<j>.csv, summary.csv, savings.csv, avg_sp.csv and
// accuracy_unaware.csv into `dir`.
void write_report(const ExperimentConfig& cfg, const ExperimentReport& report,
                  const std::filesystem::path& dir);

}  // namespace gosplit
