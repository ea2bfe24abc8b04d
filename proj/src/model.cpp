#include "gosplit/model.hpp"

#include <fmt/format.h>

#include <fstream>
#include <sstream>

#include "gosplit/error.hpp"
#include "text_util.hpp"

namespace gosplit {

namespace {

// Tolerated relative overshoot of the power budget, absorbs the rounding of
// W* = p_max |h|^2 / (gamma N0).
constexpr double kPowerSlack = 1e-9;

}  // namespace

SplitProfile::SplitProfile(std::vector<Stage> stages) : stages_(std::move(stages)) {
  if (stages_.empty()) {
    throw DomainError("split profile needs at least one splitting point");
  }
  prefix_.reserve(stages_.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < stages_.size(); ++k) {
    const auto& s = stages_[k];
    if (!(s.features >= 1.0)) {
      throw DomainError(fmt::format("SP {}: feature count must be >= 1 (got {})", k, s.features));
    }
    if (!(s.flops >= 0.0)) {
      throw DomainError(fmt::format("SP {}: FLOPs must be >= 0 (got {})", k, s.flops));
    }
    acc += s.flops;
    prefix_.push_back(acc);
  }
}

const Stage& SplitProfile::stage(SpIndex k) const {
  if (k > last_sp()) {
    throw DomainError(fmt::format("SP index {} outside 0..{}", k, last_sp()));
  }
  return stages_[k];
}

double SplitProfile::cumulative_flops(SpIndex k) const {
  if (k > last_sp()) {
    throw DomainError(fmt::format("SP index {} outside 0..{}", k, last_sp()));
  }
  return prefix_[k];
}

SplitProfile SplitProfile::mobilenet_v2() {
  // Multiply-accumulates of each layer group, counted from the network
  // definition; FLOPs = 2 * MACs. Spatial side `hw` is the output resolution.
  struct Block {
    double in_ch, expand, out_ch, in_hw, out_hw;
  };
  auto conv_macs = [](double hw, double cin, double cout, double ksize) {
    return hw * hw * cin * cout * ksize * ksize;
  };
  auto bottleneck_macs = [&](const Block& b) {
    const double hidden = b.in_ch * b.expand;
    double macs = 0.0;
    if (b.expand != 1.0) macs += conv_macs(b.in_hw, b.in_ch, hidden, 1);
    macs += b.out_hw * b.out_hw * hidden * 9.0;  // depthwise 3x3
    macs += conv_macs(b.out_hw, hidden, b.out_ch, 1);
    return macs;
  };

  std::vector<Stage> stages;
  stages.push_back({224.0 * 224.0 * 3.0, 0.0});
  stages.push_back({112.0 * 112.0 * 32.0, 2.0 * conv_macs(112, 3, 32, 3)});

  // (t, c, n, s) table of the inverted-residual stages.
  struct Group {
    double t, c;
    int n, s;
  };
  const Group groups[] = {{1, 16, 1, 1},  {6, 24, 2, 2},  {6, 32, 3, 2}, {6, 64, 4, 2},
                          {6, 96, 3, 1},  {6, 160, 3, 2}, {6, 320, 1, 1}};
  double ch = 32.0;
  double hw = 112.0;
  for (const auto& g : groups) {
    for (int i = 0; i < g.n; ++i) {
      const double out_hw = (i == 0 && g.s == 2) ? hw / 2.0 : hw;
      const Block b{ch, g.t, g.c, hw, out_hw};
      stages.push_back({out_hw * out_hw * g.c, 2.0 * bottleneck_macs(b)});
      ch = g.c;
      hw = out_hw;
    }
  }
  // 1x1 conv to 1280 channels, global pooling, 6-way classifier.
  const double head = conv_macs(7, 320, 1280, 1) + 1280.0 * 6.0;
  stages.push_back({6.0, 2.0 * head});
  return SplitProfile(std::move(stages));
}

SplitProfile load_profile(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!detail::next_content_line(in, line, lineno)) {
    throw ParseError("profile: empty input");
  }
  const auto header = detail::split_csv(line);
  if (header != std::vector<std::string>{"k", "L", "F"}) {
    throw ParseError("profile: header must be `k,L,F`, got `" + line + "`", lineno);
  }
  std::vector<Stage> stages;
  while (detail::next_content_line(in, line, lineno)) {
    const auto cells = detail::split_csv(line);
    if (cells.size() != 3) {
      throw ParseError(fmt::format("profile: expected 3 columns, got {}", cells.size()), lineno);
    }
    const double k = detail::parse_double(cells[0], lineno, "k");
    if (k != static_cast<double>(stages.size())) {
      throw ParseError(fmt::format("profile: expected k = {}", stages.size()), lineno);
    }
    Stage s{detail::parse_double(cells[1], lineno, "L"),
            detail::parse_double(cells[2], lineno, "F")};
    if (!(s.features >= 1.0) || !(s.flops >= 0.0)) {
      throw ParseError("profile: need L >= 1 and F >= 0", lineno);
    }
    stages.push_back(s);
  }
  if (stages.empty()) throw ParseError("profile: no splitting points");
  return SplitProfile(std::move(stages));
}

SplitProfile load_profile_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open profile file " + path);
  return load_profile(in);
}

void save_profile(std::ostream& out, const SplitProfile& profile) {
  out << "k,L,F\n";
  for (std::size_t k = 0; k < profile.size(); ++k) {
    const auto& s = profile.stage(k);
    out << k << ',' << fmt::format("{}", s.features) << ',' << fmt::format("{}", s.flops) << '\n';
  }
}

void DeviceParams::validate() const {
  if (!(f_l_min > 0.0)) throw DomainError("device: f_l_min must be > 0");
  if (!(f_l_min <= f_l_max)) throw DomainError("device: f_l_min must not exceed f_l_max");
  if (!(eta_l > 0.0)) throw DomainError("device: eta_l must be > 0");
  if (!(kappa > 0.0)) throw DomainError("device: kappa must be > 0");
  if (!(p_tx_max > 0.0)) throw DomainError("device: p_tx_max must be > 0");
}

void ServerParams::validate() const {
  if (!(f_r_max > 0.0)) throw DomainError("server: f_r_max must be > 0");
  if (!(eta_r > 0.0)) throw DomainError("server: eta_r must be > 0");
}

void RadioParams::validate() const {
  if (!(n0 > 0.0)) throw DomainError("radio: N0 must be > 0");
  if (!(noise_figure >= 1.0)) throw DomainError("radio: noise figure must be >= 1 (linear)");
  if (!(w_max > 0.0)) throw DomainError("radio: W_max must be > 0");
  if (!(beta >= 0.0 && beta <= 1.0)) throw DomainError("radio: roll-off must lie in [0,1]");
  if (snr_grid.empty()) throw DomainError("radio: SNR grid is empty");
  for (std::size_t i = 0; i < snr_grid.size(); ++i) {
    if (!(snr_grid[i] > 0.0)) throw DomainError("radio: SNR grid values must be > 0");
    if (i > 0 && !(snr_grid[i] > snr_grid[i - 1])) {
      throw DomainError("radio: SNR grid must be strictly increasing");
    }
  }
}

LocalCost local_cost(const SplitProfile& profile, const DeviceParams& dev, SpIndex k,
                     double f_l, unsigned batch_size) {
  const double flops = profile.cumulative_flops(k);
  if (k == 0) return {};
  if (!(f_l > 0.0)) {
    throw DomainError(fmt::format("local computation at SP {} needs f_l > 0", k));
  }
  const double work = static_cast<double>(batch_size) * flops;
  return {work / (dev.eta_l * f_l), work * dev.kappa * f_l * f_l / dev.eta_l};
}

TransmitCost transmit_cost(const SplitProfile& profile, const RadioParams& radio,
                           const DeviceParams& dev, SpIndex k, double gamma, double bandwidth,
                           double channel_gain, unsigned batch_size) {
  const auto& st = profile.stage(k);
  if (k == profile.last_sp()) return {};
  if (!(bandwidth > 0.0)) {
    throw DomainError(fmt::format("transmission at SP {} needs W > 0", k));
  }
  if (!(channel_gain > 0.0)) throw DomainError("channel gain must be > 0");
  const double power = gamma * radio.effective_n0() * bandwidth / channel_gain;
  if (power > dev.p_tx_max * (1.0 + kPowerSlack)) {
    throw InfeasibleError(
        fmt::format("required transmit power {:.6g} W exceeds budget {:.6g} W", power, dev.p_tx_max));
  }
  const double delay =
      (1.0 + radio.beta) * st.features * static_cast<double>(batch_size) / (2.0 * bandwidth);
  return {delay, power * delay, power};
}

double remote_delay(const SplitProfile& profile, const ServerParams& srv, SpIndex k,
                    double alpha_r, unsigned batch_size) {
  if (!(alpha_r > 0.0 && alpha_r <= 1.0)) {
    throw DomainError(fmt::format("server availability must lie in (0,1], got {}", alpha_r));
  }
  const double done = profile.cumulative_flops(k);
  if (k == profile.last_sp()) return 0.0;
  const double remaining = profile.total_flops() - done;
  return remaining * static_cast<double>(batch_size) / (srv.eta_r * alpha_r * srv.f_r_max);
}

CostBreakdown slot_cost(const SystemParams& sys, const ResourceDecision& decision,
                        const SlotContext& ctx) {
  if (ctx.batch_size == 0) return {};
  const auto local = local_cost(sys.profile, sys.device, decision.k, decision.f_l, ctx.batch_size);
  const auto tx = transmit_cost(sys.profile, sys.radio, sys.device, decision.k, decision.gamma,
                                decision.bandwidth, ctx.channel_gain, ctx.batch_size);
  const double remote =
      remote_delay(sys.profile, sys.server, decision.k, ctx.alpha_r, ctx.batch_size);

  CostBreakdown c;
  c.d_local = local.delay;
  c.d_tx = tx.delay;
  c.d_remote = remote;
  c.d_total = c.d_local + c.d_tx + c.d_remote;
  c.e_local = local.energy;
  c.e_tx = tx.energy;
  c.e_total = c.e_local + c.e_tx;
  c.p_tx = tx.power;
  return c;
}

void check_decision(const SystemParams& sys, const ResourceDecision& d, const SlotContext& ctx) {
  const SpIndex last = sys.profile.last_sp();
  if (d.k > last) throw DomainError(fmt::format("SP index {} outside 0..{}", d.k, last));
  if (d.k == 0) {
    if (d.f_l != 0.0) throw DomainError("full offloading requires f_l = 0");
  } else if (d.f_l < sys.device.f_l_min || d.f_l > sys.device.f_l_max) {
    throw DomainError(fmt::format("f_l = {} outside [f_l_min, f_l_max]", d.f_l));
  }
  if (d.k == last) {
    if (d.bandwidth != 0.0) throw DomainError("full local computation requires W = 0");
    return;
  }
  if (!(d.bandwidth > 0.0) || d.bandwidth > sys.radio.w_max) {
    throw DomainError(fmt::format("W = {} outside (0, W_max]", d.bandwidth));
  }
  const double power = d.gamma * sys.radio.effective_n0() * d.bandwidth / ctx.channel_gain;
  if (power > sys.device.p_tx_max * (1.0 + kPowerSlack)) {
    throw InfeasibleError(fmt::format("transmit power {:.6g} W exceeds budget", power));
  }
}

}  // namespace gosplit
