#pragma once

// Physical cost models of the edge device / edge server pair: local
// computation, analog uplink transmission and remote completion of a split DNN.
// All quantities are SI base units (s, J, W, Hz, FLOPs); SNR is linear.

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

namespace gosplit {

using SpIndex = std::size_t;

struct Stage {
  double features = 1.0;  // L_k: real scalars emitted at this SP
  double flops = 0.0;     // F_k: cost of the layers between SP k-1 and SP k
};

// A DNN seen as the sequence of its admissible splitting points 0..J.
// SP 0 is full offloading (raw input sent), SP J is full local inference.
class SplitProfile {
 public:
  SplitProfile() = default;
  explicit SplitProfile(std::vector<Stage> stages);

  // Index J of the last splitting point.
  SpIndex last_sp() const noexcept { return stages_.size() - 1; }
  std::size_t size() const noexcept { return stages_.size(); }

  const Stage& stage(SpIndex k) const;
  const std::vector<Stage>& stages() const noexcept { return stages_; }

  // Sum of F_j for j = 0..k.
  double cumulative_flops(SpIndex k) const;
  double total_flops() const noexcept { return prefix_.back(); }

  // MobileNetV2 (224x224 input, 6-class head) cut into 20 splitting points.
  static SplitProfile mobilenet_v2();

 private:
  std::vector<Stage> stages_;
  std::vector<double> prefix_;
};

// CSV with header `k,L,F`, one row per SP, k ascending from 0.
SplitProfile load_profile(std::istream& in);
SplitProfile load_profile_file(const std::string& path);
void save_profile(std::ostream& out, const SplitProfile& profile);

struct DeviceParams {
  double f_l_min = 0.0;   // Hz
  double f_l_max = 0.0;   // Hz
  double eta_l = 0.0;     // FLOPs per cycle
  double kappa = 0.0;     // effective switched capacitance
  double p_tx_max = 0.0;  // W

  void validate() const;
};

struct ServerParams {
  double f_r_max = 0.0;  // Hz
  double eta_r = 0.0;    // FLOPs per cycle

  void validate() const;
};

struct RadioParams {
  double n0 = 0.0;            // noise PSD, W/Hz
  double noise_figure = 1.0;  // linear
  double w_max = 0.0;         // Hz
  double beta = 0.25;         // SRRC roll-off
  std::vector<double> snr_grid;  // admissible target SNRs, linear, increasing

  // Noise PSD seen at the receiver, N0 * F.
  double effective_n0() const noexcept { return n0 * noise_figure; }
  void validate() const;
};

struct SlotContext {
  std::size_t t = 0;
  unsigned batch_size = 0;    // card(B(t))
  double channel_gain = 1.0;  // |h(t)|^2, path loss included
  double alpha_r = 1.0;       // fraction of f_r_max available this slot
};

// Phi(t) = [W, k, gamma, f_l]
struct ResourceDecision {
  SpIndex k = 0;
  double gamma = 0.0;  // linear; 0 when k == J
  double bandwidth = 0.0;
  double f_l = 0.0;

  bool operator==(const ResourceDecision&) const = default;
};

struct CostBreakdown {
  double d_local = 0.0;
  double d_tx = 0.0;
  double d_remote = 0.0;
  double d_total = 0.0;
  double e_local = 0.0;
  double e_tx = 0.0;
  double e_total = 0.0;
  double p_tx = 0.0;
};

struct LocalCost {
  double delay = 0.0;
  double energy = 0.0;
};

struct TransmitCost {
  double delay = 0.0;
  double energy = 0.0;
  double power = 0.0;
};

// Everything needed to price a decision; shared read-only by all runs.
struct SystemParams {
  SplitProfile profile;
  DeviceParams device;
  ServerParams server;
  RadioParams radio;
};

LocalCost local_cost(const SplitProfile& profile, const DeviceParams& dev, SpIndex k,
                     double f_l, unsigned batch_size);

// Throws InfeasibleError when gamma*N0_eff*W/|h|^2 exceeds p_tx_max.
TransmitCost transmit_cost(const SplitProfile& profile, const RadioParams& radio,
                           const DeviceParams& dev, SpIndex k, double gamma, double bandwidth,
                           double channel_gain, unsigned batch_size);

double remote_delay(const SplitProfile& profile, const ServerParams& srv, SpIndex k,
                    double alpha_r, unsigned batch_size);

CostBreakdown slot_cost(const SystemParams& sys, const ResourceDecision& decision,
                        const SlotContext& ctx);

// Checks decision invariants (indicator structure, frequency and bandwidth
// boxes, power budget) against a slot; throws DomainError / InfeasibleError.
void check_decision(const SystemParams& sys, const ResourceDecision& decision,
                    const SlotContext& ctx);

}  // namespace gosplit
