#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "doctest.h"
#include "sddestab/config.hpp"
#include "sddestab/errors.hpp"
#include "sddestab/markov.hpp"
#include "sddestab/model.hpp"
#include "sddestab/rng.hpp"
#include "sddestab/simulate.hpp"

using namespace sddestab;

namespace {

ControlSchedule make_schedule(double period, double width, double obs_gap) {
  ControlSchedule s;
  s.period = period;
  s.width = width;
  s.obs_gap = obs_gap;
  return s;
}

// Single-mode scalar callback system with the benchmark's growth envelope.
SystemSpec callback_spec(VectorField drift, VectorField diffusion, double x0) {
  SystemSpec s;
  s.generator = GeneratorMatrix::from_rows({{0.0}});
  CallbackModel cb;
  cb.dim = 1;
  cb.drift = std::move(drift);
  cb.diffusion = std::move(diffusion);
  s.coeffs = cb;
  s.delay = DelayFunction::constant(0.15);
  s.growth = example5_preset().system.growth;
  s.history.constant = {x0};
  s.history.r0 = 0;
  return s;
}

NoiseSource zero_noise() {
  return [](long, std::vector<double>& out) { std::fill(out.begin(), out.end(), 0.0); };
}

} // namespace

TEST_CASE("zero initial data stays at zero for any seed") {
  RunConfig cfg = example5_preset();
  cfg.system.history.constant = {0.0};
  ControlSchedule sched = make_schedule(1.0, 0.6, 0.01);
  for (uint64_t seed : {uint64_t(1), uint64_t(42), uint64_t(987654321)}) {
    Trajectory traj = integrate(cfg.system, sched, 2.0, 1e-3, seed, true);
    REQUIRE(traj.n_points() == 2001);
    CHECK_FALSE(traj.exploded);
    bool all_zero = true;
    for (double v : traj.states) all_zero = all_zero && v == 0.0;
    CHECK(all_zero);
  }
}

TEST_CASE("linear drift without noise matches the exponential solution") {
  SystemSpec spec = callback_spec(
      [](const std::vector<double>& x, const std::vector<double>&, int, double,
         std::vector<double>& out) { out[0] = -x[0]; },
      [](const std::vector<double>&, const std::vector<double>&, int, double,
         std::vector<double>& out) { out[0] = 0.0; },
      1.0);
  ModePath modes = sample_mode_path(spec.generator, 0, 1.1, 9, 0);
  Trajectory traj = integrate_with_inputs(spec, make_schedule(1.0, 0.0, 0.01), 1.0, 1e-3, modes,
                                          zero_noise(), false);
  REQUIRE(traj.n_points() == 1001);
  CHECK(std::fabs(traj.x(1000) - std::exp(-1.0)) < 0.01);
}

TEST_CASE("constant diffusion reproduces the Brownian terminal variance") {
  const double sigma = 0.7;
  SystemSpec spec = callback_spec(
      [](const std::vector<double>&, const std::vector<double>&, int, double,
         std::vector<double>& out) { out[0] = 0.0; },
      [sigma](const std::vector<double>&, const std::vector<double>&, int, double,
              std::vector<double>& out) { out[0] = sigma; },
      0.0);
  ControlSchedule sched = make_schedule(1.0, 0.0, 0.01);
  const long n_paths = 10000;
  double sum = 0.0, sumsq = 0.0;
  for (long p = 0; p < n_paths; ++p) {
    Trajectory t = integrate_path(spec, sched, 1.0, 1e-3, 424242, static_cast<uint64_t>(p), false);
    const double v = t.x(t.n_points() - 1);
    sum += v;
    sumsq += v * v;
  }
  const double mean = sum / static_cast<double>(n_paths);
  const double var =
      (sumsq - static_cast<double>(n_paths) * mean * mean) / static_cast<double>(n_paths - 1);
  // x(1) is exactly N(0, sigma^2); allow three standard errors of the sample variance
  const double tol = 3.0 * sigma * sigma * std::sqrt(2.0 / static_cast<double>(n_paths - 1));
  CHECK(std::fabs(var - sigma * sigma) < tol);
}

TEST_CASE("zero control width reproduces the uncontrolled path exactly") {
  RunConfig cfg = example5_preset();
  ControlSchedule sched = make_schedule(1.0, 0.0, 0.01);
  Trajectory a = integrate(cfg.system, sched, 5.0, 1e-3, 7, true);
  Trajectory b = integrate(cfg.system, sched, 5.0, 1e-3, 7, false);
  CHECK(a.states == b.states);
  CHECK(a.mode == b.mode);
  CHECK(a.times == b.times);
  bool never_on = true;
  for (uint8_t c : a.control_on) never_on = never_on && c == 0;
  CHECK(never_on);
}

TEST_CASE("observation values stay frozen between observation instants") {
  RunConfig cfg = example5_preset();
  ControlSchedule sched = make_schedule(1.0, 0.6, 0.01);
  Trajectory traj = integrate(cfg.system, sched, 3.0, 1e-3, 99, true);
  REQUIRE(traj.n_points() == 3001);
  REQUIRE_FALSE(traj.exploded);
  bool frozen_state = true, frozen_mode = true, schedule_ok = true;
  for (size_t k = 0; k < traj.n_points(); ++k) {
    const size_t anchor = (k / 10) * 10; // observation instants every 10 grid points
    frozen_state = frozen_state && traj.obs_state[k] == traj.states[anchor];
    frozen_mode = frozen_mode && traj.obs_mode[k] == traj.mode[anchor];
    schedule_ok =
        schedule_ok && (traj.control_on[k] != 0) == (indicator_at(sched, traj.times[k]) != 0);
  }
  CHECK(frozen_state);
  CHECK(frozen_mode);
  CHECK(schedule_ok);
}

TEST_CASE("observed-mode staleness shrinks with the observation gap") {
  RunConfig cfg = example5_preset();
  const double gaps[3] = {0.1, 0.01, 0.001};
  double fracs[3] = {0.0, 0.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    ControlSchedule sched = make_schedule(1.0, 0.6, gaps[i]);
    Trajectory traj = integrate(cfg.system, sched, 30.0, 1e-4, 2024, true);
    REQUIRE_FALSE(traj.exploded);
    long stale = 0;
    for (size_t k = 0; k < traj.n_points(); ++k)
      if (traj.obs_mode[k] != traj.mode[k]) ++stale;
    fracs[i] = static_cast<double>(stale) / static_cast<double>(traj.n_points());
  }
  CHECK(fracs[0] > fracs[1]);
  CHECK(fracs[1] > fracs[2]);
  CHECK(fracs[2] > 0.0);
}

TEST_CASE("halving the step roughly halves the strong terminal error") {
  SystemSpec spec = callback_spec(
      [](const std::vector<double>& x, const std::vector<double>&, int, double,
         std::vector<double>& out) { out[0] = -x[0]; },
      [](const std::vector<double>& x, const std::vector<double>&, int, double,
         std::vector<double>& out) { out[0] = 0.1 * x[0]; },
      1.0);
  ControlSchedule sched = make_schedule(1.0, 0.0, 0.1);
  const double horizon = 1.0;
  const double dt_ref = 1e-5;
  const long n_fine = 100000;
  const int n_paths = 6;
  const long multiples[2] = {40, 20}; // dt = 4e-4 and 2e-4
  ModePath modes = sample_mode_path(spec.generator, 0, horizon + 1.0, 555, 0);
  double err_sq[2] = {0.0, 0.0};
  std::vector<double> fine(static_cast<size_t>(n_fine));
  for (int p = 0; p < n_paths; ++p) {
    Rng rng(777, static_cast<uint64_t>(p), 1);
    for (long j = 0; j < n_fine; ++j) fine[static_cast<size_t>(j)] = rng.gaussian();
    NoiseSource ref_noise = [&fine](long k, std::vector<double>& out) {
      out[0] = fine[static_cast<size_t>(k)];
    };
    Trajectory ref =
        integrate_with_inputs(spec, sched, horizon, dt_ref, modes, ref_noise, false);
    const double x_ref = ref.x(ref.n_points() - 1);
    for (int i = 0; i < 2; ++i) {
      const long m = multiples[i];
      // aggregate the fine increments so both resolutions see the same Brownian path
      NoiseSource coarse = [&fine, m](long k, std::vector<double>& out) {
        double s = 0.0;
        for (long j = k * m; j < (k + 1) * m; ++j) s += fine[static_cast<size_t>(j)];
        out[0] = s / std::sqrt(static_cast<double>(m));
      };
      Trajectory t = integrate_with_inputs(spec, sched, horizon,
                                           dt_ref * static_cast<double>(m), modes, coarse, false);
      const double d = t.x(t.n_points() - 1) - x_ref;
      err_sq[i] += d * d;
    }
  }
  const double e_coarse = std::sqrt(err_sq[0] / n_paths);
  const double e_fine = std::sqrt(err_sq[1] / n_paths);
  REQUIRE(e_fine > 0.0);
  const double ratio = e_coarse / e_fine;
  CHECK(ratio > 4.0 / 3.0);
  CHECK(ratio < 3.0);
}

TEST_CASE("single-path ensemble matches the direct integration bitwise") {
  RunConfig cfg = example5_preset();
  ControlSchedule sched = make_schedule(1.0, 0.6, 0.01);
  std::vector<Trajectory> ens = integrate_ensemble(cfg.system, sched, 2.0, 1e-3, 31337, 1, true);
  REQUIRE(ens.size() == 1);
  Trajectory direct = integrate(cfg.system, sched, 2.0, 1e-3, 31337, true);
  CHECK(ens[0].states == direct.states);
  CHECK(ens[0].mode == direct.mode);
}

TEST_CASE("repeated integration is bitwise deterministic and paths are distinct") {
  RunConfig cfg = example5_preset();
  ControlSchedule sched = make_schedule(1.0, 0.6, 0.01);
  Trajectory a = integrate(cfg.system, sched, 4.0, 1e-3, 20240501, true);
  Trajectory b = integrate(cfg.system, sched, 4.0, 1e-3, 20240501, true);
  CHECK(a.times == b.times);
  CHECK(a.states == b.states);
  CHECK(a.mode == b.mode);
  CHECK(a.obs_mode == b.obs_mode);
  Trajectory other = integrate_path(cfg.system, sched, 4.0, 1e-3, 20240501, 1, true);
  CHECK(other.states != a.states);
}

TEST_CASE("controlled benchmark decays in mean square over the horizon") {
  RunConfig cfg = example5_preset();
  ControlSchedule sched = make_schedule(1.0, 0.6, 0.01);
  const long n_paths = 200;
  double m1 = 0.0, m15 = 0.0;
  long exploded = 0;
  for (long p = 0; p < n_paths; ++p) {
    Trajectory t =
        integrate_path(cfg.system, sched, 15.0, 1e-3, 12345, static_cast<uint64_t>(p), true);
    if (t.exploded) {
      ++exploded;
      continue;
    }
    m1 += t.x(1000) * t.x(1000);
    m15 += t.x(15000) * t.x(15000);
  }
  CHECK(exploded == 0);
  CHECK(m15 < m1);
}

TEST_CASE("non-finite growth truncates and flags the path") {
  SystemSpec spec = callback_spec(
      [](const std::vector<double>&, const std::vector<double>&, int, double,
         std::vector<double>& out) { out[0] = 0.0; },
      [](const std::vector<double>& x, const std::vector<double>&, int, double,
         std::vector<double>& out) { out[0] = 1e60 * x[0]; },
      1.0);
  ModePath modes = sample_mode_path(spec.generator, 0, 2.0, 1, 0);
  NoiseSource unit = [](long, std::vector<double>& out) { out[0] = 1.0; };
  Trajectory t = integrate_with_inputs(spec, make_schedule(1.0, 0.0, 0.01), 1.0, 1e-3, modes,
                                       unit, false);
  CHECK(t.exploded);
  CHECK(t.n_points() == 2);
  CHECK(t.explosion_time == doctest::Approx(2e-3));
  CHECK(t.times.back() == doctest::Approx(1e-3));
}

TEST_CASE("step and gap preconditions are enforced") {
  RunConfig cfg = example5_preset();
  // step larger than the smallest delay would read future values
  CHECK_THROWS_AS(integrate(cfg.system, make_schedule(1.0, 0.6, 0.15), 1.0, 0.15, 1, true),
                  ConfigError);
  // observation gap must land on the step grid
  CHECK_THROWS_AS(integrate(cfg.system, make_schedule(1.0, 0.6, 0.0105), 1.0, 1e-3, 1, true),
                  ConfigError);
  CHECK_THROWS_AS(
      integrate_ensemble(cfg.system, make_schedule(1.0, 0.6, 0.01), 1.0, 1e-3, 1, 0, true),
      ConfigError);
}

TEST_CASE("trajectory CSV uses the documented header and 1-based modes") {
  RunConfig cfg = example5_preset();
  Trajectory t = integrate(cfg.system, make_schedule(1.0, 0.6, 0.01), 0.05, 1e-3, 3, true);
  std::string csv = trajectory_csv(t);
  CHECK(csv.rfind("t,x,mode,obs_mode,control_on\n", 0) == 0);
  // first data row: t=0, unit initial state, first mode, control window open
  CHECK(csv.find("t,x,mode,obs_mode,control_on\n0,1,1,1,1\n") == 0);
}

TEST_CASE("multi-dimensional trajectories label each component column") {
  SystemSpec s;
  s.generator = GeneratorMatrix::from_rows({{0.0}});
  CallbackModel cb;
  cb.dim = 2;
  cb.drift = [](const std::vector<double>&, const std::vector<double>&, int, double,
                std::vector<double>& out) { out[0] = out[1] = 0.0; };
  cb.diffusion = [](const std::vector<double>&, const std::vector<double>&, int, double,
                    std::vector<double>& out) { out[0] = out[1] = 0.0; };
  s.coeffs = cb;
  s.delay = DelayFunction::constant(0.15);
  s.growth = example5_preset().system.growth;
  s.history.constant = {1.0, -2.0};
  s.history.r0 = 0;
  Trajectory t = integrate(s, make_schedule(1.0, 0.0, 0.01), 0.05, 1e-2, 5, false);
  std::string csv = trajectory_csv(t);
  CHECK(csv.rfind("t,x0,x1,mode,obs_mode,control_on\n", 0) == 0);
  CHECK(t.x(3, 0) == 1.0);
  CHECK(t.x(3, 1) == -2.0);
}
