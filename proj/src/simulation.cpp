#include "gosplit/simulation.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "gosplit/error.hpp"
#include "gosplit/units.hpp"

namespace gosplit {

namespace {

// Stream tags mixed into the seed of each generator.
constexpr std::uint64_t kFadingTag = 0x66616465;
constexpr std::uint64_t kArrivalTag = 0x61727276;
constexpr std::uint64_t kAvailabilityTag = 0x61766169;

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag)};
  return std::mt19937_64(seq);
}

std::string fmt_num(double v) { return fmt::format("{}", v); }

}  // namespace

EnvironmentParams EnvironmentParams::with_path_loss_db(double db) {
  EnvironmentParams env;
  env.path_loss = units::db_to_linear(db);
  return env;
}

double EnvironmentParams::path_loss_db() const { return units::linear_to_db(path_loss); }

void EnvironmentParams::validate() const {
  if (!(path_loss > 0.0)) throw DomainError("environment: path loss must be > 0");
  if (!(arrival_rate >= 0.0)) throw DomainError("environment: arrival rate must be >= 0");
  if (!(alpha_floor >= 0.0 && alpha_floor < 1.0)) {
    throw DomainError("environment: alpha floor must lie in [0,1)");
  }
}

RngStreams::RngStreams(std::uint64_t seed)
    : fading_(make_stream(seed, kFadingTag)),
      arrivals_(make_stream(seed, kArrivalTag)),
      availability_(make_stream(seed, kAvailabilityTag)) {}

SlotContext gen_slot_context(const EnvironmentParams& env, RngStreams& streams, std::size_t t) {
  SlotContext ctx;
  ctx.t = t;

  // |h|^2 of a unit-variance Rayleigh channel is Exp(1). Draw 1 - u so the
  // sample never hits zero.
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double fade = -std::log(1.0 - unit(streams.fading()));
  ctx.channel_gain = std::max(fade, std::numeric_limits<double>::min()) / env.path_loss;

  if (env.arrival_rate > 0.0) {
    std::poisson_distribution<unsigned> arrivals(env.arrival_rate);
    ctx.batch_size = arrivals(streams.arrivals());
  }

  const double u = 1.0 - unit(streams.availability());  // (0, 1]
  ctx.alpha_r = env.alpha_floor + (1.0 - env.alpha_floor) * u;
  return ctx;
}

std::vector<SlotContext> gen_contexts(const EnvironmentParams& env, std::uint64_t seed,
                                      std::size_t slots) {
  env.validate();
  RngStreams streams(seed);
  std::vector<SlotContext> out;
  out.reserve(slots);
  for (std::size_t t = 1; t <= slots; ++t) out.push_back(gen_slot_context(env, streams, t));
  return out;
}

void RunOptions::validate() const {
  if (slots < 1) throw ConfigError("run: need at least one slot");
  if (!(transient_fraction >= 0.0 && transient_fraction < 1.0)) {
    throw ConfigError("run: transient fraction must lie in [0,1)");
  }
}

void check_setup(const SystemParams& sys, const AccuracyLUT& lut, const ControllerState& ctrl) {
  try {
    sys.device.validate();
    sys.server.validate();
    sys.radio.validate();
    ctrl.validate();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (lut.last_sp() != sys.profile.last_sp()) {
    throw ConfigError(fmt::format("accuracy LUT has {} SPs, profile has {}", lut.sp_count(),
                                  sys.profile.size()));
  }
  const auto& a = lut.snr_grid();
  const auto& b = sys.radio.snr_grid;
  if (a.size() != b.size()) throw ConfigError("accuracy LUT and radio SNR grids differ in size");
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (std::abs(a[j] - b[j]) > 1e-9 * a[j]) {
      throw ConfigError(fmt::format("SNR grids differ at position {} ({:.6g} dB vs {:.6g} dB)", j,
                                    units::linear_to_db(a[j]), units::linear_to_db(b[j])));
    }
  }
}

RunResult run_simulation(const Policy& policy, const SystemParams& sys, const AccuracyLUT& lut,
                         const EnvironmentParams& env, const ControllerState& ctrl,
                         const RunOptions& opts) {
  opts.validate();
  return run_on_contexts(policy, sys, lut, env, ctrl, opts, gen_contexts(env, opts.seed, opts.slots));
}

RunResult run_on_contexts(const Policy& policy, const SystemParams& sys, const AccuracyLUT& lut,
                          const EnvironmentParams& env, const ControllerState& ctrl,
                          const RunOptions& opts, const std::vector<SlotContext>& contexts) {
  opts.validate();
  env.validate();
  check_setup(sys, lut, ctrl);
  if (contexts.size() != opts.slots) {
    throw ConfigError(fmt::format("expected {} slot contexts, got {}", opts.slots, contexts.size()));
  }

  RunResult res;
  res.policy = policy.name();
  res.v = ctrl.v;
  res.key = {opts.seed,       opts.slots,       opts.transient_fraction, env.path_loss,
             env.arrival_rate, env.alpha_floor, ctrl.d_avg,              ctrl.g_avg};

  ControllerState state = effective_state(policy, ctrl);
  const auto skip = static_cast<std::size_t>(std::floor(opts.transient_fraction * opts.slots));
  if (opts.keep_trace) res.trace.reserve(opts.slots);

  double sum_e = 0.0, sum_d = 0.0, sum_g = 0.0, sum_k = 0.0;
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    const auto& ctx = contexts[i];
    const auto report = policy_decide(policy, state, sys, lut, ctx);
    if (ctx.batch_size > 0) {
      if (opts.check_decisions) check_decision(sys, report.decision, ctx);
      state = queue_update(state, report.cost.d_total, report.accuracy);
      if (i >= skip) {
        sum_e += report.cost.e_total;
        sum_d += report.cost.d_total;
        sum_g += report.accuracy;
        sum_k += static_cast<double>(report.decision.k);
        ++res.counted_slots;
      }
    }
    if (opts.keep_trace) res.trace.push_back({ctx, report, state.z, state.y});
  }

  if (res.counted_slots > 0) {
    const double n = static_cast<double>(res.counted_slots);
    res.avg_energy = sum_e / n;
    res.avg_delay = sum_d / n;
    res.avg_accuracy = sum_g / n;
    res.avg_sp = sum_k / n;
  }
  res.final_z_over_n = state.z / static_cast<double>(opts.slots);
  res.final_y_over_n = state.y / static_cast<double>(opts.slots);
  return res;
}

bool meets_delay(const RunResult& r, double slack) {
  return r.avg_delay <= r.key.d_avg * (1.0 + slack);
}

bool meets_accuracy(const RunResult& r, double slack) {
  return r.avg_accuracy >= r.key.g_avg * (1.0 - slack);
}

ComparisonTable summarize(const std::vector<RunResult>& results, const RunResult& baseline,
                          double slack) {
  ComparisonTable table;
  table.baseline = baseline.policy;
  for (const auto& r : results) {
    if (!(r.key == baseline.key)) {
      throw ConfigError(fmt::format("run `{}` was produced under a different environment than "
                                    "baseline `{}`",
                                    r.policy, baseline.policy));
    }
    ComparisonRow row;
    row.policy = r.policy;
    row.v = r.v;
    row.avg_energy = r.avg_energy;
    row.saving_pct =
        baseline.avg_energy > 0.0 ? 100.0 * (1.0 - r.avg_energy / baseline.avg_energy) : 0.0;
    row.avg_sp = r.avg_sp;
    row.avg_delay = r.avg_delay;
    row.avg_accuracy = r.avg_accuracy;
    row.delay_violated = !meets_delay(r, slack);
    row.accuracy_violated = !meets_accuracy(r, slack);
    table.rows.push_back(row);
  }
  return table;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace) {
  out << "t,batch,h2,alpha_r,k,gamma_db,W,f_l,d_total,e_total,acc,Z,Y\n";
  for (const auto& row : trace) {
    const auto& d = row.report.decision;
    // gamma has no meaning without transmission; leave the field empty.
    const std::string gamma_db = d.gamma > 0.0 ? fmt::format("{:.6g}", units::linear_to_db(d.gamma)) : "";
    out << row.ctx.t << ',' << row.ctx.batch_size << ',' << fmt_num(row.ctx.channel_gain) << ','
        << fmt_num(row.ctx.alpha_r) << ',' << d.k << ',' << gamma_db << ','
        << fmt_num(d.bandwidth) << ',' << fmt_num(d.f_l) << ','
        << fmt_num(row.report.cost.d_total) << ',' << fmt_num(row.report.cost.e_total) << ','
        << fmt_num(row.report.accuracy) << ',' << fmt_num(row.z) << ',' << fmt_num(row.y) << '\n';
  }
}

}  // namespace gosplit
