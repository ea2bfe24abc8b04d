#pragma once

// Slotted simulation of one edge device: Rayleigh block fading, Poisson batch
// arrivals and a randomly loaded edge server, driven by one control policy.

#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "gosplit/accuracy.hpp"
#include "gosplit/controller.hpp"
#include "gosplit/model.hpp"

namespace gosplit {

struct EnvironmentParams {
  double path_loss = 3.1622776601683795e11;  // linear attenuation (115 dB)
  double arrival_rate = 5.0;                  // mean batch size per slot
  double alpha_floor = 0.0;                   // alpha_r ~ U(alpha_floor, 1]

  static EnvironmentParams with_path_loss_db(double db);
  double path_loss_db() const;
  void validate() const;
};

// Independent generators for the three exogenous processes, so changing one
// process's parameters never perturbs the others' samples.
class RngStreams {
 public:
  explicit RngStreams(std::uint64_t seed);

  std::mt19937_64& fading() { return fading_; }
  std::mt19937_64& arrivals() { return arrivals_; }
  std::mt19937_64& availability() { return availability_; }

 private:
  std::mt19937_64 fading_;
  std::mt19937_64 arrivals_;
  std::mt19937_64 availability_;
};

SlotContext gen_slot_context(const EnvironmentParams& env, RngStreams& streams, std::size_t t);

// Contexts for slots 1..N.
std::vector<SlotContext> gen_contexts(const EnvironmentParams& env, std::uint64_t seed,
                                      std::size_t slots);

struct RunOptions {
  std::size_t slots = 10000;
  std::uint64_t seed = 1;
  double transient_fraction = 0.1;
  bool keep_trace = false;
  bool check_decisions = true;  // assert constraints (c)-(f) on every slot

  void validate() const;
};

struct TraceRow {
  SlotContext ctx;
  SlotDecisionReport report;
  double z = 0.0;  // queues after this slot's update
  double y = 0.0;
};

// Identifies the environment a run was produced in; runs are only comparable
// when their keys match.
struct RunKey {
  std::uint64_t seed = 0;
  std::size_t slots = 0;
  double transient_fraction = 0.0;
  double path_loss = 0.0;
  double arrival_rate = 0.0;
  double alpha_floor = 0.0;
  double d_avg = 0.0;
  double g_avg = 0.0;

  bool operator==(const RunKey&) const = default;
};

struct RunResult {
  std::string policy;
  RunKey key;
  double v = 0.0;
  double avg_energy = 0.0;    // J per non-empty post-transient slot
  double avg_delay = 0.0;     // s
  double avg_accuracy = 0.0;
  double avg_sp = 0.0;
  double final_z_over_n = 0.0;
  double final_y_over_n = 0.0;
  std::size_t counted_slots = 0;
  std::vector<TraceRow> trace;
};

// Checks that the system tables fit together (LUT vs profile, LUT vs radio
// grid) and that every parameter block is valid. Throws ConfigError.
void check_setup(const SystemParams& sys, const AccuracyLUT& lut, const ControllerState& ctrl);

RunResult run_simulation(const Policy& policy, const SystemParams& sys, const AccuracyLUT& lut,
                         const EnvironmentParams& env, const ControllerState& ctrl,
                         const RunOptions& opts);

// Same loop over pre-drawn contexts (used to share draws across policies).
RunResult run_on_contexts(const Policy& policy, const SystemParams& sys, const AccuracyLUT& lut,
                          const EnvironmentParams& env, const ControllerState& ctrl,
                          const RunOptions& opts, const std::vector<SlotContext>& contexts);

struct ComparisonRow {
  std::string policy;
  double v = 0.0;
  double avg_energy = 0.0;
  double saving_pct = 0.0;  // 100 * (1 - E_policy / E_baseline)
  double avg_sp = 0.0;
  double avg_delay = 0.0;
  double avg_accuracy = 0.0;
  bool delay_violated = false;
  bool accuracy_violated = false;
};

struct ComparisonTable {
  std::string baseline;
  std::vector<ComparisonRow> rows;
};

// Delay/accuracy targets are judged with relative slack `slack`.
bool meets_delay(const RunResult& r, double slack);
bool meets_accuracy(const RunResult& r, double slack);

// Throws ConfigError when any result comes from a different environment than
// the baseline.
ComparisonTable summarize(const std::vector<RunResult>& results, const RunResult& baseline,
                          double slack = 0.05);

// `t,batch,h2,alpha_r,k,gamma_db,W,f_l,d_total,e_total,acc,Z,Y`
void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& trace);

}  // namespace gosplit
