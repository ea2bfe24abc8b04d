#include "gosplit/experiment.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "gosplit/error.hpp"
#include "gosplit/units.hpp"

namespace gosplit {

namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------------------
// YAML reading

std::string mark_suffix(const YAML::Node& node) {
  const auto m = node.Mark();
  return m.line >= 0 ? fmt::format(" (line {})", m.line + 1) : "";
}

// Reads one mapping, remembering which keys were consumed so leftovers can be
// reported as unknown.
class MapReader {
 public:
  MapReader(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
    if (!node_.IsMap()) throw ParseError("`" + display() + "` must be a mapping" + mark_suffix(node_));
  }

  template <typename T>
  void scalar(const char* key, T& out) {
    const auto n = take(key);
    if (!n) return;
    if (!n.IsScalar()) throw ParseError("`" + where(key) + "` must be a scalar" + mark_suffix(n));
    try {
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      throw ParseError(fmt::format("`{}` has invalid value `{}`{}", where(key), n.Scalar(),
                                   mark_suffix(n)));
    }
  }

  template <typename T>
  void list(const char* key, std::vector<T>& out) {
    const auto n = take(key);
    if (!n) return;
    if (!n.IsSequence()) throw ParseError("`" + where(key) + "` must be a list" + mark_suffix(n));
    std::vector<T> values;
    for (std::size_t i = 0; i < n.size(); ++i) {
      try {
        values.push_back(n[i].as<T>());
      } catch (const YAML::Exception&) {
        throw ParseError(fmt::format("`{}[{}]` has invalid value{}", where(key), i, mark_suffix(n[i])));
      }
    }
    out = std::move(values);
  }

  std::optional<MapReader> child(const char* key) {
    const auto n = take(key);
    if (!n) return std::nullopt;
    return MapReader(n, where(key));
  }

  bool has(const char* key) const { return static_cast<bool>(node_[key]); }

  void finish() const {
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!seen_.count(key)) {
        throw ParseError("unknown key `" + where(key.c_str()) + "`" + mark_suffix(kv.first));
      }
    }
  }

 private:
  YAML::Node take(const char* key) {
    seen_.insert(key);
    auto n = node_[key];
    if (n && n.IsNull()) return YAML::Node();
    return n;
  }
  std::string where(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  YAML::Node node_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string resolve(const fs::path& base, const std::string& file) {
  if (file.empty()) return file;
  const fs::path p(file);
  return p.is_absolute() ? file : (base / p).lexically_normal().string();
}

// ---------------------------------------------------------------------------
// Formatting

std::string num(double v) { return fmt::format("{}", v); }

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Job execution

// Runs fn(i) for i in [0, n) on a small thread pool; results are indexed, so
// the outcome does not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

bool label_matches(const std::string& label, const Policy& p) {
  if (label == "bfsp") return p.kind == PolicyKind::FixedSp;
  if (label == "bfsnr") return p.kind == PolicyKind::FixedSnr;
  return Policy::parse(label).name() == p.name();
}

std::optional<std::size_t> select_min_energy(const CellResult& cell, const std::string& label) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cell.runs.size(); ++i) {
    if (!cell.feasible[i] || !label_matches(label, cell.run_policy[i])) continue;
    if (!best || cell.runs[i].avg_energy < cell.runs[*best].avg_energy) best = i;
  }
  return best;
}

struct Job {
  std::size_t cell;
  Policy policy;
  double v;
};

}  // namespace

std::vector<double> ExperimentConfig::log_grid(double from, double to, unsigned per_decade) {
  // Snap exponents that are integral up to rounding (1e-3 -> -3 exactly).
  auto snap = [](double x) { return std::abs(x - std::round(x)) < 1e-9 ? std::round(x) : x; };
  const double lo = snap(std::log10(from) * per_decade);
  const double hi = snap(std::log10(to) * per_decade);
  const auto steps = static_cast<int>(std::floor(hi - lo + 1e-9));
  std::vector<double> v;
  for (int i = 0; i <= steps; ++i) v.push_back(std::pow(10.0, (lo + i) / per_decade));
  return v;
}

std::vector<double> ExperimentConfig::default_v_grid() { return log_grid(1e-3, 1e3, 3); }

ExperimentConfig parse_config(const std::string& yaml_text, const fs::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ParseError(std::string("YAML syntax error: ") + e.what());
  }
  ExperimentConfig cfg;
  if (!root || root.IsNull()) return cfg;
  MapReader top(root, "");

  if (auto m = top.child("device")) {
    m->scalar("f_l_min_hz", cfg.device.f_l_min_hz);
    m->scalar("f_l_max_hz", cfg.device.f_l_max_hz);
    m->scalar("eta_l_flops_per_cycle", cfg.device.eta_l);
    m->scalar("kappa", cfg.device.kappa);
    m->scalar("p_tx_max_w", cfg.device.p_tx_max_w);
    m->finish();
  }
  if (auto m = top.child("server")) {
    m->scalar("f_r_max_hz", cfg.server.f_r_max_hz);
    m->scalar("eta_r_flops_per_cycle", cfg.server.eta_r);
    m->finish();
  }
  if (auto m = top.child("radio")) {
    m->scalar("n0_dbm_hz", cfg.radio.n0_dbm_hz);
    m->scalar("noise_figure_db", cfg.radio.noise_figure_db);
    m->scalar("w_max_hz", cfg.radio.w_max_hz);
    m->scalar("rolloff", cfg.radio.rolloff);
    m->list("snr_grid_db", cfg.radio.snr_grid_db);
    m->finish();
  }
  if (auto m = top.child("environment")) {
    m->scalar("arrival_rate", cfg.environment.arrival_rate);
    m->scalar("alpha_floor", cfg.environment.alpha_floor);
    m->finish();
  }
  if (auto m = top.child("controller")) {
    m->scalar("mu", cfg.controller.mu);
    m->scalar("lambda_y", cfg.controller.lambda_y);
    m->scalar("d_avg_s", cfg.controller.d_avg_s);
    m->finish();
  }
  if (auto m = top.child("profile")) {
    m->scalar("file", cfg.profile_file);
    m->finish();
  }
  if (auto m = top.child("accuracy")) {
    m->scalar("lut_file", cfg.lut_file);
    if (auto s = m->child("synthetic")) {
      s->scalar("g_max", cfg.synth.g_max);
      s->scalar("depth_slope", cfg.synth.depth_slope);
      s->scalar("snr_slope", cfg.synth.snr_slope);
      s->scalar("k_mid", cfg.synth.k_mid);
      s->scalar("snr_mid_db", cfg.synth.snr_mid_db);
      s->finish();
    }
    m->finish();
  }
  if (auto m = top.child("sweep")) {
    if (m->has("v") && m->has("v_log_grid")) {
      throw ParseError("`sweep.v` and `sweep.v_log_grid` are mutually exclusive");
    }
    m->list("v", cfg.sweep.v);
    if (auto g = m->child("v_log_grid")) {
      double from = 1e-3, to = 1e3;
      unsigned per_decade = 3;
      g->scalar("from", from);
      g->scalar("to", to);
      g->scalar("per_decade", per_decade);
      g->finish();
      if (!(from > 0.0) || !(to >= from) || per_decade == 0) {
        throw ParseError("`sweep.v_log_grid` needs 0 < from <= to and per_decade >= 1");
      }
      cfg.sweep.v = ExperimentConfig::log_grid(from, to, per_decade);
    }
    m->list("g_avg", cfg.sweep.g_avg);
    m->list("path_loss_db", cfg.sweep.path_loss_db);
    m->list("policies", cfg.sweep.policies);
    m->finish();
  }
  if (auto m = top.child("run")) {
    m->scalar("slots", cfg.run.slots);
    m->scalar("seed", cfg.run.seed);
    m->scalar("transient_fraction", cfg.run.transient_fraction);
    m->scalar("slack", cfg.run.slack);
    m->scalar("stability_threshold", cfg.run.stability_threshold);
    m->scalar("threads", cfg.run.threads);
    m->finish();
  }
  top.scalar("output_dir", cfg.output_dir);
  top.finish();

  cfg.profile_file = resolve(base_dir, cfg.profile_file);
  cfg.lut_file = resolve(base_dir, cfg.lut_file);
  cfg.output_dir = resolve(base_dir, cfg.output_dir);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), fs::path(path).parent_path());
}

std::vector<Diagnostic> validate_config(const ExperimentConfig& cfg) {
  std::vector<Diagnostic> diags;
  auto require = [&](bool ok, std::string where, std::string what) {
    if (!ok) diags.push_back({std::move(where), std::move(what)});
  };

  const auto& d = cfg.device;
  require(d.f_l_min_hz > 0.0, "device.f_l_min_hz", "must be > 0");
  require(d.f_l_min_hz <= d.f_l_max_hz, "device.f_l_min_hz, device.f_l_max_hz",
          fmt::format("f_l_min_hz ({}) exceeds f_l_max_hz ({})", d.f_l_min_hz, d.f_l_max_hz));
  require(d.eta_l > 0.0, "device.eta_l_flops_per_cycle", "must be > 0");
  require(d.kappa > 0.0, "device.kappa", "must be > 0");
  require(d.p_tx_max_w > 0.0, "device.p_tx_max_w", "must be > 0");

  require(cfg.server.f_r_max_hz > 0.0, "server.f_r_max_hz", "must be > 0");
  require(cfg.server.eta_r > 0.0, "server.eta_r_flops_per_cycle", "must be > 0");

  const auto& r = cfg.radio;
  require(std::isfinite(r.n0_dbm_hz), "radio.n0_dbm_hz", "must be finite");
  require(r.noise_figure_db >= 0.0, "radio.noise_figure_db", "must be >= 0 dB");
  require(r.w_max_hz > 0.0, "radio.w_max_hz", "must be > 0");
  require(r.rolloff >= 0.0 && r.rolloff <= 1.0, "radio.rolloff", "must lie in [0,1]");
  require(!r.snr_grid_db.empty(), "radio.snr_grid_db", "must not be empty");
  bool grid_ok = !r.snr_grid_db.empty();
  for (std::size_t i = 1; i < r.snr_grid_db.size(); ++i) {
    if (!(r.snr_grid_db[i] > r.snr_grid_db[i - 1])) {
      require(false, fmt::format("radio.snr_grid_db[{}]", i), "grid must be strictly increasing");
      grid_ok = false;
    }
  }

  require(cfg.environment.arrival_rate >= 0.0, "environment.arrival_rate", "must be >= 0");
  require(cfg.environment.alpha_floor >= 0.0 && cfg.environment.alpha_floor < 1.0,
          "environment.alpha_floor", "must lie in [0,1)");

  require(cfg.controller.mu > 0.0, "controller.mu", "must be > 0");
  require(cfg.controller.lambda_y >= 0.0, "controller.lambda_y", "must be >= 0");
  require(cfg.controller.d_avg_s > 0.0, "controller.d_avg_s", "must be > 0");

  require(!cfg.sweep.v.empty(), "sweep.v", "must not be empty");
  for (std::size_t i = 0; i < cfg.sweep.v.size(); ++i) {
    require(cfg.sweep.v[i] > 0.0, fmt::format("sweep.v[{}]", i), "V must be > 0");
  }
  require(!cfg.sweep.g_avg.empty(), "sweep.g_avg", "must not be empty");
  for (std::size_t i = 0; i < cfg.sweep.g_avg.size(); ++i) {
    const double g = cfg.sweep.g_avg[i];
    require(g >= 0.0 && g <= 1.0, fmt::format("sweep.g_avg[{}]", i), "must lie in [0,1]");
  }
  require(!cfg.sweep.path_loss_db.empty(), "sweep.path_loss_db", "must not be empty");
  for (std::size_t i = 0; i < cfg.sweep.path_loss_db.size(); ++i) {
    require(std::isfinite(cfg.sweep.path_loss_db[i]), fmt::format("sweep.path_loss_db[{}]", i),
            "must be finite");
  }
  require(!cfg.sweep.policies.empty(), "sweep.policies", "must not be empty");

  require(cfg.run.slots >= 1, "run.slots", "must be >= 1");
  require(cfg.run.transient_fraction >= 0.0 && cfg.run.transient_fraction < 1.0,
          "run.transient_fraction", "must lie in [0,1)");
  require(cfg.run.slack >= 0.0, "run.slack", "must be >= 0");
  require(cfg.run.stability_threshold > 0.0, "run.stability_threshold", "must be > 0");

  std::optional<SplitProfile> profile;
  if (cfg.profile_file.empty()) {
    profile = SplitProfile::mobilenet_v2();
  } else if (!fs::exists(cfg.profile_file)) {
    require(false, "profile.file", "file not found: " + cfg.profile_file);
  } else {
    try {
      profile = load_profile_file(cfg.profile_file);
    } catch (const std::exception& e) {
      require(false, "profile.file", e.what());
    }
  }

  if (cfg.lut_file.empty()) {
    try {
      cfg.synth.validate();
    } catch (const DomainError& e) {
      require(false, "accuracy.synthetic", e.what());
    }
  } else if (!fs::exists(cfg.lut_file)) {
    require(false, "accuracy.lut_file", "file not found: " + cfg.lut_file);
  } else {
    try {
      const auto lut = load_lut_file(cfg.lut_file);
      if (profile && lut.last_sp() != profile->last_sp()) {
        require(false, "accuracy.lut_file",
                fmt::format("LUT has {} SP rows, profile has {} SPs", lut.sp_count(), profile->size()));
      }
      const auto& lg = lut.snr_grid_db();
      for (double db : r.snr_grid_db) {
        if (std::find(lg.begin(), lg.end(), db) == lg.end()) {
          require(false, "accuracy.lut_file",
                  fmt::format("LUT grid lacks {} dB present in radio.snr_grid_db", db));
        }
      }
      for (double db : lg) {
        if (std::find(r.snr_grid_db.begin(), r.snr_grid_db.end(), db) == r.snr_grid_db.end()) {
          require(false, "accuracy.lut_file",
                  fmt::format("LUT grid has {} dB absent from radio.snr_grid_db", db));
        }
      }
    } catch (const std::exception& e) {
      require(false, "accuracy.lut_file", e.what());
    }
  }

  for (std::size_t i = 0; i < cfg.sweep.policies.size(); ++i) {
    const auto& label = cfg.sweep.policies[i];
    const auto where = fmt::format("sweep.policies[{}]", i);
    if (label == "bfsp" || label == "bfsnr") continue;
    try {
      const auto p = Policy::parse(label);
      if (p.kind == PolicyKind::FixedSp && profile && p.fixed_sp > profile->last_sp()) {
        require(false, where, fmt::format("fixed SP {} outside 0..{}", p.fixed_sp, profile->last_sp()));
      }
      if (p.kind == PolicyKind::FixedSnr && grid_ok &&
          std::find(r.snr_grid_db.begin(), r.snr_grid_db.end(), p.fixed_snr_db) ==
              r.snr_grid_db.end()) {
        require(false, where, fmt::format("fixed SNR {} dB not on radio.snr_grid_db", p.fixed_snr_db));
      }
    } catch (const std::exception& e) {
      require(false, where, e.what());
    }
  }
  return diags;
}

SystemParams build_system(const ExperimentConfig& cfg) {
  SystemParams sys;
  sys.profile = cfg.profile_file.empty() ? SplitProfile::mobilenet_v2()
                                         : load_profile_file(cfg.profile_file);
  sys.device = {cfg.device.f_l_min_hz, cfg.device.f_l_max_hz, cfg.device.eta_l, cfg.device.kappa,
                cfg.device.p_tx_max_w};
  sys.server = {cfg.server.f_r_max_hz, cfg.server.eta_r};
  sys.radio.n0 = units::dbm_to_watt(cfg.radio.n0_dbm_hz);
  sys.radio.noise_figure = units::db_to_linear(cfg.radio.noise_figure_db);
  sys.radio.w_max = cfg.radio.w_max_hz;
  sys.radio.beta = cfg.radio.rolloff;
  for (double db : cfg.radio.snr_grid_db) sys.radio.snr_grid.push_back(units::db_to_linear(db));
  return sys;
}

AccuracyLUT build_lut(const ExperimentConfig& cfg, const SystemParams& sys) {
  if (!cfg.lut_file.empty()) return load_lut_file(cfg.lut_file);
  return synth_lut(sys.profile.last_sp(), cfg.radio.snr_grid_db, cfg.synth);
}

EnvironmentParams environment_for(const ExperimentConfig& cfg, double path_loss_db) {
  auto env = EnvironmentParams::with_path_loss_db(path_loss_db);
  env.arrival_rate = cfg.environment.arrival_rate;
  env.alpha_floor = cfg.environment.alpha_floor;
  return env;
}

ControllerState controller_for(const ExperimentConfig& cfg, double g_avg, double v) {
  ControllerState s;
  s.mu = cfg.controller.mu;
  s.lambda_y = cfg.controller.lambda_y;
  s.d_avg = cfg.controller.d_avg_s;
  s.g_avg = g_avg;
  s.v = v;
  return s;
}

std::vector<Policy> expand_policies(const ExperimentConfig& cfg, const SystemParams& sys) {
  std::vector<Policy> out;
  auto add = [&](const Policy& p) {
    if (std::none_of(out.begin(), out.end(), [&](const Policy& q) { return q.name() == p.name(); })) {
      out.push_back(p);
    }
  };
  for (const auto& label : cfg.sweep.policies) {
    if (label == "bfsp") {
      for (SpIndex k = 0; k <= sys.profile.last_sp(); ++k) add(Policy::fixed_sp_at(k));
    } else if (label == "bfsnr") {
      for (double db : cfg.radio.snr_grid_db) add(Policy::fixed_snr_at(db));
    } else {
      add(Policy::parse(label));
    }
  }
  return out;
}

bool is_feasible(const RunResult& r, const Policy& policy, double slack, double stability_threshold) {
  if (r.counted_slots == 0) return false;
  if (!meets_delay(r, slack) || !(r.final_z_over_n < stability_threshold)) return false;
  if (policy.kind == PolicyKind::AccuracyUnaware) return true;
  return meets_accuracy(r, slack) && r.final_y_over_n < stability_threshold;
}

const RunResult* CellResult::pick(const std::string& label) const {
  for (const auto& s : selected) {
    if (s.label == label) return s.run ? &runs[*s.run] : nullptr;
  }
  return nullptr;
}

const CellResult& ExperimentReport::cell(std::size_t g_index, std::size_t pl_index) const {
  for (const auto& c : cells) {
    if (c.g_index == g_index && c.pl_index == pl_index) return c;
  }
  throw std::out_of_range(fmt::format("no cell ({}, {})", g_index, pl_index));
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  const auto sys = build_system(cfg);
  const auto lut = build_lut(cfg, sys);
  const auto policies = expand_policies(cfg, sys);

  RunOptions opts;
  opts.slots = cfg.run.slots;
  opts.seed = cfg.run.seed;
  opts.transient_fraction = cfg.run.transient_fraction;

  // One set of draws per path loss, shared by every policy and target.
  std::vector<std::vector<SlotContext>> contexts;
  for (double pl : cfg.sweep.path_loss_db) {
    contexts.push_back(gen_contexts(environment_for(cfg, pl), opts.seed, opts.slots));
  }

  ExperimentReport report;
  std::vector<Job> jobs;
  for (std::size_t gi = 0; gi < cfg.sweep.g_avg.size(); ++gi) {
    for (std::size_t pi = 0; pi < cfg.sweep.path_loss_db.size(); ++pi) {
      CellResult cell;
      cell.g_index = gi;
      cell.pl_index = pi;
      cell.g_avg = cfg.sweep.g_avg[gi];
      cell.path_loss_db = cfg.sweep.path_loss_db[pi];
      for (const auto& p : policies) {
        for (double v : cfg.sweep.v) {
          jobs.push_back({report.cells.size(), p, v});
          cell.run_policy.push_back(p);
        }
      }
      report.cells.push_back(std::move(cell));
    }
  }

  std::vector<RunResult> results(jobs.size());
  parallel_for(jobs.size(), cfg.run.threads, [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto& cell = report.cells[job.cell];
    results[i] = run_on_contexts(job.policy, sys, lut, environment_for(cfg, cell.path_loss_db),
                                 controller_for(cfg, cell.g_avg, job.v), opts,
                                 contexts[cell.pl_index]);
  });

  for (std::size_t i = 0; i < jobs.size(); ++i) {
    auto& cell = report.cells[jobs[i].cell];
    cell.feasible.push_back(
        is_feasible(results[i], jobs[i].policy, cfg.run.slack, cfg.run.stability_threshold));
    cell.runs.push_back(std::move(results[i]));
  }
  for (auto& cell : report.cells) {
    for (const auto& label : cfg.sweep.policies) {
      cell.selected.push_back({label, select_min_energy(cell, label)});
    }
  }
  return report;
}

RunResult run_traced(const ExperimentConfig& cfg, const Policy& policy, std::size_t g_index,
                     std::size_t pl_index, std::optional<double> v_override) {
  if (g_index >= cfg.sweep.g_avg.size() || pl_index >= cfg.sweep.path_loss_db.size()) {
    throw ConfigError(fmt::format("cell ({},{}) outside the {}x{} sweep grid", g_index, pl_index,
                                  cfg.sweep.g_avg.size(), cfg.sweep.path_loss_db.size()));
  }
  const auto sys = build_system(cfg);
  const auto lut = build_lut(cfg, sys);
  const auto env = environment_for(cfg, cfg.sweep.path_loss_db[pl_index]);
  const double g_avg = cfg.sweep.g_avg[g_index];

  RunOptions opts;
  opts.slots = cfg.run.slots;
  opts.seed = cfg.run.seed;
  opts.transient_fraction = cfg.run.transient_fraction;
  const auto contexts = gen_contexts(env, opts.seed, opts.slots);

  double v = 0.0;
  if (v_override) {
    v = *v_override;
  } else {
    std::optional<RunResult> best;
    for (double cand : cfg.sweep.v) {
      auto r = run_on_contexts(policy, sys, lut, env, controller_for(cfg, g_avg, cand), opts, contexts);
      if (!is_feasible(r, policy, cfg.run.slack, cfg.run.stability_threshold)) continue;
      if (!best || r.avg_energy < best->avg_energy) best = std::move(r);
    }
    if (!best) {
      throw std::runtime_error(fmt::format("no V in the sweep meets the constraints for `{}`",
                                           policy.name()));
    }
    v = best->v;
  }
  opts.keep_trace = true;
  return run_on_contexts(policy, sys, lut, env, controller_for(cfg, g_avg, v), opts, contexts);
}

void write_report(const ExperimentConfig& cfg, const ExperimentReport& report, const fs::path& dir) {
  fs::create_directories(dir);

  for (const auto& cell : report.cells) {
    std::string text = "policy,v,avg_energy,avg_delay,avg_accuracy,avg_sp,z_over_n,y_over_n,feasible\n";
    for (std::size_t i = 0; i < cell.runs.size(); ++i) {
      const auto& r = cell.runs[i];
      text += fmt::format("{},{},{},{},{},{},{},{},{}\n", r.policy, num(r.v), num(r.avg_energy),
                          num(r.avg_delay), num(r.avg_accuracy), num(r.avg_sp),
                          num(r.final_z_over_n), num(r.final_y_over_n), cell.feasible[i] ? 1 : 0);
    }
    write_file(dir / fmt::format("cell_{}_{}.csv", cell.g_index, cell.pl_index), text);
  }

  std::string summary =
      "g_avg,path_loss_db,label,policy,v,avg_energy,avg_delay,avg_accuracy,avg_sp,z_over_n,"
      "y_over_n,status\n";
  for (const auto& cell : report.cells) {
    for (const auto& sel : cell.selected) {
      if (!sel.run) {
        summary += fmt::format("{},{},{},,,,,,,,,INFEASIBLE\n", num(cell.g_avg),
                               num(cell.path_loss_db), sel.label);
        continue;
      }
      const auto& r = cell.runs[*sel.run];
      summary += fmt::format("{},{},{},{},{},{},{},{},{},{},{},OK\n", num(cell.g_avg),
                             num(cell.path_loss_db), sel.label, r.policy, num(r.v),
                             num(r.avg_energy), num(r.avg_delay), num(r.avg_accuracy),
                             num(r.avg_sp), num(r.final_z_over_n), num(r.final_y_over_n));
    }
  }
  write_file(dir / "summary.csv", summary);

  std::string savings =
      "g_avg,path_loss_db,benchmark,benchmark_policy,dynamic_energy,benchmark_energy,saving_pct\n";
  for (const auto& cell : report.cells) {
    const RunResult* dyn = cell.pick("dynamic");
    for (const char* bench : {"flc", "bfsp", "bfsnr"}) {
      if (std::find(cfg.sweep.policies.begin(), cfg.sweep.policies.end(), bench) ==
          cfg.sweep.policies.end()) {
        continue;
      }
      const RunResult* b = cell.pick(bench);
      if (!dyn || !b) {
        savings += fmt::format("{},{},{},,,,INFEASIBLE\n", num(cell.g_avg), num(cell.path_loss_db), bench);
        continue;
      }
      const auto table = summarize({*dyn}, *b, cfg.run.slack);
      savings += fmt::format("{},{},{},{},{},{},{}\n", num(cell.g_avg), num(cell.path_loss_db), bench,
                             b->policy, num(dyn->avg_energy), num(b->avg_energy),
                             num(table.rows.front().saving_pct));
    }
  }
  write_file(dir / "savings.csv", savings);

  std::string avg_sp = "g_avg";
  for (double pl : cfg.sweep.path_loss_db) avg_sp += fmt::format(",pl_{}", num(pl));
  avg_sp += '\n';
  for (std::size_t gi = 0; gi < cfg.sweep.g_avg.size(); ++gi) {
    avg_sp += num(cfg.sweep.g_avg[gi]);
    for (std::size_t pi = 0; pi < cfg.sweep.path_loss_db.size(); ++pi) {
      const RunResult* dyn = report.cell(gi, pi).pick("dynamic");
      avg_sp += ',' + (dyn ? num(dyn->avg_sp) : std::string());
    }
    avg_sp += '\n';
  }
  write_file(dir / "avg_sp.csv", avg_sp);

  std::string unaware = "g_avg,path_loss_db,unaware_accuracy,unaware_energy,dynamic_accuracy\n";
  for (const auto& cell : report.cells) {
    const RunResult* au = cell.pick("accuracy_unaware");
    if (!au) continue;
    const RunResult* dyn = cell.pick("dynamic");
    unaware += fmt::format("{},{},{},{},{}\n", num(cell.g_avg), num(cell.path_loss_db),
                           num(au->avg_accuracy), num(au->avg_energy),
                           dyn ? num(dyn->avg_accuracy) : std::string());
  }
  write_file(dir / "accuracy_unaware.csv", unaware);
}

}  // namespace gosplit
