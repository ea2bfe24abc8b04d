#include "gosplit/controller.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "gosplit/error.hpp"
#include "gosplit/units.hpp"
#include "text_util.hpp"

namespace gosplit {

namespace {

// Objectives closer than this fraction of their term magnitudes are ties.
constexpr double kTieRel = 1e-12;

struct Candidate {
  SlotDecisionReport report;
  double scale = 0.0;  // sum of |term| of the objective
};

struct SearchSpace {
  SpIndex k_lo = 0;
  SpIndex k_hi = 0;
  std::optional<std::size_t> snr_idx;  // pinned grid position
};

double term_scale(const ControllerState& s, const CostBreakdown& c, double acc) {
  return std::abs(s.mu * s.z * c.d_total) + std::abs(s.lambda_y * s.y * acc) +
         std::abs(s.v * c.e_total);
}

// True when `c` should replace `best`.
bool better(const Candidate& c, const Candidate& best) {
  const double tol = kTieRel * std::max(c.scale, best.scale);
  const double diff = c.report.objective - best.report.objective;
  if (diff < -tol) return true;
  if (diff > tol) return false;
  // Enumeration runs in ascending (k, gamma), so keeping the incumbent on a
  // full tie implements the lower-k / lower-gamma preference.
  return c.report.cost.e_total < best.report.cost.e_total;
}

SlotDecisionReport search(const ControllerState& state, const SystemParams& sys,
                          const AccuracyLUT& lut, const SlotContext& ctx, const SearchSpace& space) {
  const SpIndex last = sys.profile.last_sp();
  const auto& grid = sys.radio.snr_grid;

  std::optional<Candidate> best;
  auto consider = [&](SpIndex k, double gamma, double bandwidth, double f_l, const LocalCost& local,
                      const TransmitCost& tx, double remote, double acc) {
    Candidate c;
    auto& r = c.report;
    r.decision = {k, gamma, bandwidth, f_l};
    r.cost.d_local = local.delay;
    r.cost.d_tx = tx.delay;
    r.cost.d_remote = remote;
    r.cost.d_total = local.delay + tx.delay + remote;
    r.cost.e_local = local.energy;
    r.cost.e_tx = tx.energy;
    r.cost.e_total = local.energy + tx.energy;
    r.cost.p_tx = tx.power;
    r.accuracy = acc;
    r.objective = dpp_objective(state, r.cost, acc);
    c.scale = term_scale(state, r.cost, acc);
    if (!best || better(c, *best)) best = c;
  };

  for (SpIndex k = space.k_lo; k <= space.k_hi; ++k) {
    const double f_l = optimal_frequency(state, sys.device, k);
    const auto local = local_cost(sys.profile, sys.device, k, f_l, ctx.batch_size);
    const double remote = remote_delay(sys.profile, sys.server, k, ctx.alpha_r, ctx.batch_size);
    if (k == last) {
      consider(k, 0.0, 0.0, f_l, local, {}, remote, lut.noiseless());
      continue;
    }
    const std::size_t j_lo = space.snr_idx.value_or(0);
    const std::size_t j_hi = space.snr_idx ? *space.snr_idx + 1 : grid.size();
    for (std::size_t j = j_lo; j < j_hi; ++j) {
      const double w = optimal_bandwidth(sys.radio, sys.device, grid[j], k, last, ctx.channel_gain);
      if (!(w > 0.0)) continue;
      const auto tx = transmit_cost(sys.profile, sys.radio, sys.device, k, grid[j], w,
                                    ctx.channel_gain, ctx.batch_size);
      consider(k, grid[j], w, f_l, local, tx, remote, lut.at(k, j));
    }
  }
  if (!best) throw InfeasibleError("no feasible (k, gamma) pair in this slot");
  return best->report;
}

SlotDecisionReport idle_report(SpIndex k) {
  SlotDecisionReport r;
  r.decision.k = k;
  return r;
}

void check_tables(const SystemParams& sys, const AccuracyLUT& lut) {
  if (lut.last_sp() != sys.profile.last_sp()) {
    throw DomainError(fmt::format("accuracy LUT covers SPs 0..{}, profile 0..{}", lut.last_sp(),
                                  sys.profile.last_sp()));
  }
  const auto& a = lut.snr_grid();
  const auto& b = sys.radio.snr_grid;
  bool same = a.size() == b.size();
  for (std::size_t j = 0; same && j < a.size(); ++j) {
    same = std::abs(a[j] - b[j]) <= 1e-9 * a[j];
  }
  if (!same) throw DomainError("accuracy LUT and radio use different SNR grids");
}

}  // namespace

void ControllerState::validate() const {
  if (!(z >= 0.0) || !(y >= 0.0)) throw DomainError("controller: queues must be >= 0");
  if (!(mu > 0.0)) throw DomainError("controller: mu must be > 0");
  if (!(lambda_y >= 0.0)) throw DomainError("controller: lambda_y must be >= 0");
  if (!(v > 0.0)) throw DomainError("controller: V must be > 0");
  if (!(d_avg > 0.0)) throw DomainError("controller: D_avg must be > 0");
  if (!(g_avg >= 0.0 && g_avg <= 1.0)) throw DomainError("controller: G_avg must lie in [0,1]");
}

ControllerState queue_update(const ControllerState& state, double d_total, double accuracy) {
  ControllerState next = state;
  next.z = std::max(0.0, state.z + state.mu * (d_total - state.d_avg));
  next.y = std::max(0.0, state.y + state.lambda_y * (state.g_avg - accuracy));
  return next;
}

double dpp_objective(const ControllerState& state, const CostBreakdown& cost, double accuracy) {
  return state.mu * state.z * cost.d_total - state.lambda_y * state.y * accuracy +
         state.v * cost.e_total;
}

double optimal_bandwidth(const RadioParams& radio, const DeviceParams& dev, double gamma,
                         SpIndex k, SpIndex last_sp, double channel_gain) {
  if (k >= last_sp) return 0.0;
  const double power_limited = dev.p_tx_max * channel_gain / (gamma * radio.effective_n0());
  return std::min(power_limited, radio.w_max);
}

double optimal_frequency(const ControllerState& state, const DeviceParams& dev, SpIndex k) {
  if (k == 0) return 0.0;
  const double f = std::cbrt(state.mu * state.z / (2.0 * dev.kappa * state.v));
  return std::clamp(f, dev.f_l_min, dev.f_l_max);
}

SlotDecisionReport decide(const ControllerState& state, const SystemParams& sys,
                          const AccuracyLUT& lut, const SlotContext& ctx) {
  if (ctx.batch_size == 0) return idle_report(0);
  check_tables(sys, lut);
  return search(state, sys, lut, ctx, {0, sys.profile.last_sp(), std::nullopt});
}

std::string Policy::name() const {
  switch (kind) {
    case PolicyKind::Dynamic:
      return "dynamic";
    case PolicyKind::FullLocal:
      return "flc";
    case PolicyKind::FixedSp:
      return fmt::format("fixed_sp:{}", fixed_sp);
    case PolicyKind::FixedSnr:
      return fmt::format("fixed_snr:{}", fixed_snr_db);
    case PolicyKind::AccuracyUnaware:
      return "accuracy_unaware";
  }
  return "unknown";
}

Policy Policy::parse(const std::string& text) {
  if (text == "dynamic") return dynamic();
  if (text == "flc") return full_local();
  if (text == "accuracy_unaware") return accuracy_unaware();
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string head = text.substr(0, colon);
    const std::string arg = text.substr(colon + 1);
    if (head == "fixed_sp") {
      const double k = detail::parse_double(arg, 0, "fixed SP");
      if (k < 0.0 || k != std::floor(k)) throw DomainError("fixed SP must be a non-negative integer");
      return fixed_sp_at(static_cast<SpIndex>(k));
    }
    if (head == "fixed_snr") return fixed_snr_at(detail::parse_double(arg, 0, "fixed SNR"));
  }
  throw DomainError("unknown policy `" + text + "`");
}

ControllerState effective_state(const Policy& policy, const ControllerState& state) {
  ControllerState s = state;
  if (policy.kind == PolicyKind::AccuracyUnaware) {
    s.lambda_y = 0.0;
    s.y = 0.0;
  }
  return s;
}

SlotDecisionReport policy_decide(const Policy& policy, const ControllerState& state,
                                 const SystemParams& sys, const AccuracyLUT& lut,
                                 const SlotContext& ctx) {
  check_tables(sys, lut);
  const SpIndex last = sys.profile.last_sp();
  switch (policy.kind) {
    case PolicyKind::Dynamic:
      return decide(state, sys, lut, ctx);
    case PolicyKind::AccuracyUnaware:
      return decide(effective_state(policy, state), sys, lut, ctx);
    case PolicyKind::FullLocal:
      if (ctx.batch_size == 0) return idle_report(last);
      return search(state, sys, lut, ctx, {last, last, std::nullopt});
    case PolicyKind::FixedSp:
      if (policy.fixed_sp > last) {
        throw DomainError(fmt::format("fixed SP {} outside 0..{}", policy.fixed_sp, last));
      }
      if (ctx.batch_size == 0) return idle_report(policy.fixed_sp);
      return search(state, sys, lut, ctx, {policy.fixed_sp, policy.fixed_sp, std::nullopt});
    case PolicyKind::FixedSnr: {
      const std::size_t j = lut.grid_index(units::db_to_linear(policy.fixed_snr_db));
      if (ctx.batch_size == 0) return idle_report(0);
      return search(state, sys, lut, ctx, {0, last, j});
    }
  }
  throw DomainError("unknown policy kind");
}

}  // namespace gosplit
