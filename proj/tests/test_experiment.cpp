#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gosplit/error.hpp"
#include "gosplit/experiment.hpp"

using namespace gosplit;
namespace fs = std::filesystem;

namespace {

const fs::path kSourceDir = GOSPLIT_SOURCE_DIR;
const fs::path kCli = GOSPLIT_CLI;

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("gosplit_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool has_location(const std::vector<Diagnostic>& diags, const std::string& loc) {
  for (const auto& d : diags) {
    if (d.location == loc) return true;
  }
  return false;
}

const char* kSmall = R"(
sweep:
  v: [0.1, 1, 10]
  g_avg: [0.75]
  path_loss_db: [120]
  policies: [dynamic, flc]
run:
  slots: 400
  threads: 1
)";

int run_cli(const std::string& args) {
  const std::string cmd = "\"" + kCli.string() + "\" " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("default V grid") {
  const auto v = ExperimentConfig::default_v_grid();
  REQUIRE(v.size() == 19);
  CHECK(v.front() == 1e-3);
  CHECK(v[3] == 1e-2);
  CHECK(v[9] == 1.0);
  CHECK(v.back() == 1e3);
  for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i] > v[i - 1]);
}

TEST_CASE("shipped default config") {
  const auto cfg = load_config((kSourceDir / "configs" / "default.yaml").string());
  CHECK(validate_config(cfg).empty());

  const ExperimentConfig def;
  CHECK(cfg.device.f_l_min_hz == def.device.f_l_min_hz);
  CHECK(cfg.device.kappa == def.device.kappa);
  CHECK(cfg.radio.snr_grid_db == def.radio.snr_grid_db);
  CHECK(cfg.sweep.v == def.sweep.v);
  CHECK(cfg.sweep.g_avg == def.sweep.g_avg);
  CHECK(cfg.sweep.path_loss_db == def.sweep.path_loss_db);
  CHECK(cfg.sweep.policies == def.sweep.policies);
  CHECK(cfg.run.slots == def.run.slots);
  CHECK(cfg.synth.g_max == def.synth.g_max);
  CHECK(fs::path(cfg.output_dir).is_absolute());
}

TEST_CASE("build_system converts units") {
  const ExperimentConfig cfg;
  const auto sys = build_system(cfg);
  CHECK(sys.profile.size() == 20);
  CHECK(sys.radio.n0 == doctest::Approx(3.981e-21).epsilon(1e-3));
  CHECK(sys.radio.noise_figure == doctest::Approx(3.1623).epsilon(1e-4));
  REQUIRE(sys.radio.snr_grid.size() == 8);
  CHECK(sys.radio.snr_grid[4] == 1.0);
  CHECK(sys.radio.snr_grid[7] == doctest::Approx(100.0));
  CHECK(sys.radio.beta == 0.25);
  const auto lut = build_lut(cfg, sys);
  CHECK(lut.last_sp() == 19);
}

TEST_CASE("expand_policies") {
  ExperimentConfig cfg;
  const auto sys = build_system(cfg);
  cfg.sweep.policies = {"bfsp"};
  CHECK(expand_policies(cfg, sys).size() == 20);
  cfg.sweep.policies = {"bfsnr", "fixed_snr:0"};
  CHECK(expand_policies(cfg, sys).size() == 8);
  cfg.sweep.policies = {"dynamic", "flc"};
  const auto p = expand_policies(cfg, sys);
  REQUIRE(p.size() == 2);
  CHECK(p[1] == Policy::full_local());
}

TEST_CASE("semantic diagnostics") {
  SUBCASE("clock range inverted") {
    ExperimentConfig cfg;
    cfg.device.f_l_min_hz = 2e9;
    const auto diags = validate_config(cfg);
    CHECK(has_location(diags, "device.f_l_min_hz, device.f_l_max_hz"));
  }
  SUBCASE("every problem is reported") {
    ExperimentConfig cfg;
    cfg.device.kappa = -1;
    cfg.radio.rolloff = 2;
    cfg.sweep.g_avg = {0.7, 1.3};
    cfg.sweep.policies = {"dynamic", "fixed_sp:40", "fixed_snr:7"};
    const auto diags = validate_config(cfg);
    CHECK(has_location(diags, "device.kappa"));
    CHECK(has_location(diags, "radio.rolloff"));
    CHECK(has_location(diags, "sweep.g_avg[1]"));
    CHECK(has_location(diags, "sweep.policies[1]"));
    CHECK(has_location(diags, "sweep.policies[2]"));
    CHECK(diags.size() == 5);
  }
  SUBCASE("LUT without an SNR of the radio grid") {
    const auto dir = scratch_dir("lut");
    write_file(dir / "lut.csv",
               "snr_db,-5,-4,-3,-2,0,5,10\n"
               "0,.1,.1,.1,.1,.1,.1,.1\n1,.1,.1,.1,.1,.1,.1,.1\n"
               "noiseless,0.9\n");
    write_file(dir / "profile.csv", "k,L,F\n0,100,0\n1,10,100\n");
    write_file(dir / "cfg.yaml", "profile: {file: profile.csv}\naccuracy: {lut_file: lut.csv}\n");
    const auto diags = validate_config(load_config((dir / "cfg.yaml").string()));
    REQUIRE(diags.size() == 1);
    CHECK(diags[0].location == "accuracy.lut_file");
    CHECK(diags[0].message.find("20 dB") != std::string::npos);
  }
  SUBCASE("missing files") {
    ExperimentConfig cfg;
    cfg.profile_file = "/nonexistent/profile.csv";
    cfg.lut_file = "/nonexistent/lut.csv";
    const auto diags = validate_config(cfg);
    CHECK(has_location(diags, "profile.file"));
    CHECK(has_location(diags, "accuracy.lut_file"));
  }
}

TEST_CASE("parse errors") {
  SUBCASE("unknown key names its line") {
    try {
      parse_config("device:\n  f_l_min_hz: 1e8\n  clock: 3\n", ".");
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("device.clock") != std::string::npos);
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("wrong type") {
    CHECK_THROWS_AS(parse_config("run:\n  slots: many\n", "."), ParseError);
    CHECK_THROWS_AS(parse_config("radio:\n  snr_grid_db: 5\n", "."), ParseError);
  }
  SUBCASE("V list and V grid are exclusive") {
    CHECK_THROWS_AS(
        parse_config("sweep:\n  v: [1]\n  v_log_grid: {from: 1, to: 10, per_decade: 1}\n", "."),
        ParseError);
  }
  SUBCASE("broken YAML") {
    CHECK_THROWS_AS(parse_config("device: [1, 2\n", "."), ParseError);
  }
  SUBCASE("empty document keeps defaults") {
    const auto cfg = parse_config("", ".");
    CHECK(cfg.sweep.v == ExperimentConfig::default_v_grid());
  }
}

TEST_CASE("small experiment end to end") {
  const auto dir = scratch_dir("run");
  auto cfg = parse_config(kSmall, dir);
  REQUIRE(validate_config(cfg).empty());
  const auto report = run_experiment(cfg);
  REQUIRE(report.cells.size() == 1);
  const auto& cell = report.cell(0, 0);
  CHECK(cell.runs.size() == 6);
  REQUIRE(cell.selected.size() == 2);
  CHECK(cell.selected[0].label == "dynamic");

  for (std::size_t i = 0; i < cell.runs.size(); ++i) {
    CHECK(cell.feasible[i] ==
          is_feasible(cell.runs[i], cell.run_policy[i], cfg.run.slack, cfg.run.stability_threshold));
  }
  for (const auto& sel : cell.selected) {
    if (!sel.run) continue;
    const auto& chosen = cell.runs[*sel.run];
    CHECK(cell.feasible[*sel.run]);
    for (std::size_t i = 0; i < cell.runs.size(); ++i) {
      if (cell.feasible[i] && cell.runs[i].policy == chosen.policy) {
        CHECK(chosen.avg_energy <= cell.runs[i].avg_energy);
      }
    }
  }

  write_report(cfg, report, dir / "out");
  for (const char* f : {"summary.csv", "savings.csv", "avg_sp.csv", "accuracy_unaware.csv",
                        "cell_0_0.csv"}) {
    CHECK(fs::exists(dir / "out" / f));
  }
  const auto summary = read_file(dir / "out" / "summary.csv");
  CHECK(summary.find("dynamic") != std::string::npos);

  const auto traced = run_traced(cfg, Policy::dynamic(), 0, 0, 1.0);
  CHECK(traced.trace.size() == 400);
  CHECK(traced.v == 1.0);
  CHECK_THROWS(run_traced(cfg, Policy::dynamic(), 3, 0, 1.0));
}

TEST_CASE("command line exit codes") {
  const auto dir = scratch_dir("cli");
  write_file(dir / "good.yaml", std::string(kSmall) + "output_dir: out\n");
  write_file(dir / "bad_syntax.yaml", "device: [1, 2\n");
  write_file(dir / "bad_value.yaml", "device: {f_l_min_hz: 5.0e9}\n");

  CHECK(run_cli("validate \"" + (dir / "good.yaml").string() + "\"") == 0);
  CHECK(run_cli("validate \"" + (dir / "bad_syntax.yaml").string() + "\"") == 1);
  CHECK(run_cli("validate \"" + (dir / "bad_value.yaml").string() + "\"") == 2);
  CHECK(run_cli("validate \"" + (dir / "missing.yaml").string() + "\"") == 1);
  CHECK(run_cli("trace \"" + (dir / "good.yaml").string() + "\" --policy greedy") == 2);
  CHECK(run_cli("trace \"" + (dir / "good.yaml").string() + "\" --policy flc --cell 0,0 --v 1") == 0);
  CHECK(fs::exists(dir / "out" / "trace_flc_0_0.csv"));
  CHECK(run_cli("run \"" + (dir / "good.yaml").string() + "\"") == 0);
  CHECK(fs::exists(dir / "out" / "summary.csv"));
}
