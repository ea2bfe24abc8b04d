#pragma once

// Drift-plus-penalty controller. Every slot it picks the splitting point, the
// target SNR, the uplink bandwidth and the device clock that minimize
//   mu*Z*D_tot - lambda_y*Y*G(k, gamma) + V*E_tot
// with Z and Y the virtual queues of the long-term delay and accuracy
// constraints.

#include <optional>
#include <string>

#include "gosplit/accuracy.hpp"
#include "gosplit/model.hpp"

namespace gosplit {

struct ControllerState {
  double z = 0.0;         // delay queue
  double y = 0.0;         // accuracy queue
  double mu = 1.0;        // Z step size
  double lambda_y = 1.0;  // Y step size
  double v = 1.0;         // energy weight
  double d_avg = 0.05;    // s
  double g_avg = 0.75;

  void validate() const;
};

struct SlotDecisionReport {
  ResourceDecision decision;
  CostBreakdown cost;
  double accuracy = 0.0;
  double objective = 0.0;
};

ControllerState queue_update(const ControllerState& state, double d_total, double accuracy);

double dpp_objective(const ControllerState& state, const CostBreakdown& cost, double accuracy);

// W* = min(p_max |h|^2 / (gamma N0_eff), W_max) for k < J, 0 at k = J.
double optimal_bandwidth(const RadioParams& radio, const DeviceParams& dev, double gamma,
                         SpIndex k, SpIndex last_sp, double channel_gain);

// f* = cbrt(mu Z / (2 kappa V)) clamped to [f_l_min, f_l_max] for k > 0, 0 at k = 0.
double optimal_frequency(const ControllerState& state, const DeviceParams& dev, SpIndex k);

// Exhaustive search over (k, gamma) with closed-form W and f_l. Ties on the
// objective go to lower energy, then lower k, then lower gamma. An empty
// batch yields the all-zero decision.
SlotDecisionReport decide(const ControllerState& state, const SystemParams& sys,
                          const AccuracyLUT& lut, const SlotContext& ctx);

enum class PolicyKind { Dynamic, FullLocal, FixedSp, FixedSnr, AccuracyUnaware };

struct Policy {
  PolicyKind kind = PolicyKind::Dynamic;
  SpIndex fixed_sp = 0;       // FixedSp only
  double fixed_snr_db = 0.0;  // FixedSnr only

  static Policy dynamic() { return {}; }
  static Policy full_local() { return {PolicyKind::FullLocal}; }
  static Policy fixed_sp_at(SpIndex k) { return {PolicyKind::FixedSp, k, 0.0}; }
  static Policy fixed_snr_at(double snr_db) { return {PolicyKind::FixedSnr, 0, snr_db}; }
  static Policy accuracy_unaware() { return {PolicyKind::AccuracyUnaware}; }

  // dynamic | flc | fixed_sp:<k> | fixed_snr:<dB> | accuracy_unaware
  std::string name() const;
  static Policy parse(const std::string& text);

  bool operator==(const Policy&) const = default;
};

// Controller state the policy actually runs with (accuracy-unaware drops the
// Y queue).
ControllerState effective_state(const Policy& policy, const ControllerState& state);

// Decision of a benchmark policy. FixedSp / FixedSnr values must be admissible
// (SP in 0..J, SNR on the grid) or DomainError is thrown.
SlotDecisionReport policy_decide(const Policy& policy, const ControllerState& state,
                                 const SystemParams& sys, const AccuracyLUT& lut,
                                 const SlotContext& ctx);

}  // namespace gosplit
