#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "fixtures.hpp"
#include "gosplit/error.hpp"
#include "gosplit/simulation.hpp"
#include "gosplit/units.hpp"

using namespace gosplit;

namespace {

RunOptions short_run(std::size_t slots = 2000) {
  RunOptions o;
  o.slots = slots;
  o.seed = 42;
  return o;
}

ControllerState ctrl_with(double v, double g_avg = 0.75) {
  ControllerState c;
  c.v = v;
  c.g_avg = g_avg;
  return c;
}

}  // namespace

TEST_CASE("environment draws") {
  const auto env = EnvironmentParams::with_path_loss_db(120);
  CHECK(env.path_loss == doctest::Approx(1e12));
  CHECK(env.path_loss_db() == doctest::Approx(120));

  SUBCASE("sample means") {
    const auto ctx = gen_contexts(env, 7, 50000);
    double b = 0, h = 0, a = 0;
    for (const auto& c : ctx) {
      b += c.batch_size;
      h += c.channel_gain * env.path_loss;
      a += c.alpha_r;
      CHECK(c.channel_gain > 0.0);
      CHECK(c.alpha_r > 0.0);
      CHECK(c.alpha_r <= 1.0);
    }
    const double n = static_cast<double>(ctx.size());
    CHECK(b / n == doctest::Approx(5.0).epsilon(0.02));
    CHECK(h / n == doctest::Approx(1.0).epsilon(0.02));
    CHECK(a / n == doctest::Approx(0.5).epsilon(0.02));
    CHECK(ctx.front().t == 1);
    CHECK(ctx.back().t == ctx.size());
  }
  SUBCASE("zero arrival rate gives empty batches") {
    auto quiet = env;
    quiet.arrival_rate = 0;
    for (const auto& c : gen_contexts(quiet, 1, 100)) CHECK(c.batch_size == 0);
  }
  SUBCASE("alpha floor") {
    auto loaded = env;
    loaded.alpha_floor = 0.6;
    for (const auto& c : gen_contexts(loaded, 1, 1000)) {
      CHECK(c.alpha_r > 0.6);
      CHECK(c.alpha_r <= 1.0);
    }
  }
  SUBCASE("streams are independent of each other's parameters") {
    auto other = env;
    other.arrival_rate = 9;
    other.path_loss = units::db_to_linear(125);
    const auto a = gen_contexts(env, 3, 500);
    const auto b = gen_contexts(other, 3, 500);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].alpha_r == b[i].alpha_r);
      CHECK(a[i].channel_gain * env.path_loss ==
            doctest::Approx(b[i].channel_gain * other.path_loss).epsilon(1e-12));
    }
  }
  SUBCASE("invalid parameters") {
    auto bad = env;
    bad.alpha_floor = 1.0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    bad = env;
    bad.arrival_rate = -1;
    CHECK_THROWS_AS(bad.validate(), DomainError);
  }
}

TEST_CASE("runs are deterministic") {
  const auto sys = fixtures::default_system();
  const auto lut = fixtures::default_lut(sys);
  const auto env = EnvironmentParams::with_path_loss_db(120);
  auto opts = short_run(500);
  opts.keep_trace = true;
  const auto a = run_simulation(Policy::dynamic(), sys, lut, env, ctrl_with(10), opts);
  const auto b = run_simulation(Policy::dynamic(), sys, lut, env, ctrl_with(10), opts);
  std::ostringstream sa, sb;
  write_trace_csv(sa, a.trace);
  write_trace_csv(sb, b.trace);
  CHECK(sa.str() == sb.str());
  CHECK(a.avg_energy == b.avg_energy);

  opts.seed = 43;
  const auto c = run_simulation(Policy::dynamic(), sys, lut, env, ctrl_with(10), opts);
  CHECK(c.avg_energy != a.avg_energy);
}

TEST_CASE("averages skip empty and transient slots") {
  const auto sys = fixtures::default_system();
  const auto lut = fixtures::default_lut(sys);
  const auto env = EnvironmentParams::with_path_loss_db(115);
  auto opts = short_run(1000);
  opts.keep_trace = true;
  const auto r = run_simulation(Policy::dynamic(), sys, lut, env, ctrl_with(1), opts);
  REQUIRE(r.trace.size() == 1000);

  double e = 0, d = 0;
  std::size_t n = 0;
  for (std::size_t i = 100; i < r.trace.size(); ++i) {
    const auto& row = r.trace[i];
    if (row.ctx.batch_size == 0) {
      CHECK(row.report.cost.e_total == 0.0);
      // Queues stay put in empty slots.
      CHECK(row.z == r.trace[i - 1].z);
      CHECK(row.y == r.trace[i - 1].y);
      continue;
    }
    e += row.report.cost.e_total;
    d += row.report.cost.d_total;
    ++n;
  }
  CHECK(r.counted_slots == n);
  CHECK(r.avg_energy == doctest::Approx(e / n).epsilon(1e-12));
  CHECK(r.avg_delay == doctest::Approx(d / n).epsilon(1e-12));
  CHECK(r.final_z_over_n == r.trace.back().z / 1000.0);
}

TEST_CASE("trace queues follow the update rule") {
  const auto sys = fixtures::default_system();
  const auto lut = fixtures::default_lut(sys);
  auto opts = short_run(300);
  opts.keep_trace = true;
  const auto ctrl = ctrl_with(5);
  const auto r =
      run_simulation(Policy::dynamic(), sys, lut, EnvironmentParams::with_path_loss_db(120), ctrl, opts);
  double z = 0, y = 0;
  for (const auto& row : r.trace) {
    if (row.ctx.batch_size > 0) {
      z = std::max(0.0, z + ctrl.mu * (row.report.cost.d_total - ctrl.d_avg));
      y = std::max(0.0, y + ctrl.lambda_y * (ctrl.g_avg - row.report.accuracy));
    }
    CHECK(row.z == doctest::Approx(z).epsilon(1e-12));
    CHECK(row.y == doctest::Approx(y).epsilon(1e-12));
  }
}

TEST_CASE("full local energy does not depend on the path loss") {
  const auto sys = fixtures::default_system();
  const auto lut = fixtures::default_lut(sys);
  const auto opts = short_run();
  const auto a = run_simulation(Policy::full_local(), sys, lut,
                                EnvironmentParams::with_path_loss_db(115), ctrl_with(1), opts);
  const auto b = run_simulation(Policy::full_local(), sys, lut,
                                EnvironmentParams::with_path_loss_db(125), ctrl_with(1), opts);
  CHECK(a.avg_energy == b.avg_energy);
  CHECK(a.avg_sp == sys.profile.last_sp());
  CHECK(a.avg_accuracy == doctest::Approx(lut.noiseless()).epsilon(1e-12));
}

TEST_CASE("larger V trades delay for energy") {
  const auto sys = fixtures::default_system();
  const auto lut = fixtures::default_lut(sys);
  const auto env = EnvironmentParams::with_path_loss_db(120);
  const auto opts = short_run(3000);
  const auto lo = run_simulation(Policy::dynamic(), sys, lut, env, ctrl_with(1e-2), opts);
  const auto hi = run_simulation(Policy::dynamic(), sys, lut, env, ctrl_with(1e2), opts);
  CHECK(hi.avg_energy <= lo.avg_energy);
}

TEST_CASE("summarize") {
  const auto sys = fixtures::default_system();
  const auto lut = fixtures::default_lut(sys);
  const auto env = EnvironmentParams::with_path_loss_db(120);
  const auto opts = short_run(1000);
  const auto dyn = run_simulation(Policy::dynamic(), sys, lut, env, ctrl_with(1), opts);
  const auto flc = run_simulation(Policy::full_local(), sys, lut, env, ctrl_with(1), opts);

  const auto self = summarize({dyn}, dyn);
  REQUIRE(self.rows.size() == 1);
  CHECK(self.rows[0].saving_pct == 0.0);

  const auto t = summarize({dyn, flc}, flc);
  CHECK(t.baseline == "flc");
  CHECK(t.rows[0].saving_pct == doctest::Approx(100 * (1 - dyn.avg_energy / flc.avg_energy)));
  CHECK(t.rows[1].saving_pct == 0.0);

  const auto other = run_simulation(Policy::dynamic(), sys, lut,
                                    EnvironmentParams::with_path_loss_db(125), ctrl_with(1), opts);
  CHECK_THROWS_AS(summarize({dyn, other}, flc), ConfigError);
}

TEST_CASE("run setup errors") {
  const auto sys = fixtures::default_system();
  const auto lut = fixtures::default_lut(sys);
  const auto env = EnvironmentParams::with_path_loss_db(120);
  auto opts = short_run(10);
  opts.transient_fraction = 1.0;
  CHECK_THROWS_AS(run_simulation(Policy::dynamic(), sys, lut, env, ctrl_with(1), opts), ConfigError);

  const auto short_lut = synth_lut(5, {-5, -4, -3, -2, 0, 5, 10, 20}, SynthShape{});
  CHECK_THROWS_AS(run_simulation(Policy::dynamic(), sys, short_lut, env, ctrl_with(1), short_run(10)),
                  ConfigError);
  CHECK_THROWS_AS(run_simulation(Policy::dynamic(), sys, lut, env, ctrl_with(-1), short_run(10)),
                  ConfigError);
}

TEST_CASE("trace CSV layout") {
  const auto sys = fixtures::default_system();
  const auto lut = fixtures::default_lut(sys);
  auto opts = short_run(20);
  opts.keep_trace = true;
  const auto r = run_simulation(Policy::full_local(), sys, lut,
                                EnvironmentParams::with_path_loss_db(120), ctrl_with(1), opts);
  std::ostringstream out;
  write_trace_csv(out, r.trace);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,batch,h2,alpha_r,k,gamma_db,W,f_l,d_total,e_total,acc,Z,Y");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 12);
    CHECK(line.find(",19,,") != std::string::npos);
  }
  CHECK(rows == 20);
}
