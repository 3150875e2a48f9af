#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "sddestab/config.hpp"
#include "sddestab/errors.hpp"
#include "sddestab/model.hpp"
#include "sddestab/moments.hpp"

using namespace sddestab;

namespace {

ControlSchedule make_schedule(double period, double width, double obs_gap) {
  ControlSchedule s;
  s.period = period;
  s.width = width;
  s.obs_gap = obs_gap;
  return s;
}

// Single-mode scalar system dx = a x dt + b x dB with constant delay (unused
// by the coefficients) and the benchmark growth envelope so moment orders up
// to q = 7 are accepted.
SystemSpec linear_system(double a, double b, double x0) {
  SystemSpec s;
  s.generator = GeneratorMatrix::from_rows({{0.0}});
  CallbackModel cb;
  cb.dim = 1;
  cb.drift = [a](const std::vector<double>& x, const std::vector<double>&, int, double,
                 std::vector<double>& out) { out[0] = a * x[0]; };
  cb.diffusion = [b](const std::vector<double>& x, const std::vector<double>&, int, double,
                     std::vector<double>& out) { out[0] = b * x[0]; };
  s.coeffs = cb;
  s.delay = DelayFunction::constant(0.15);
  s.growth = example5_preset().system.growth;
  s.history.constant = {x0};
  s.history.r0 = 0;
  return s;
}

} // namespace

TEST_CASE("deterministic linear decay matches the closed-form rate") {
  SystemSpec sys = linear_system(-0.25, 0.0, 2.0);
  MomentSeries series = ensemble_moments(sys, make_schedule(1.0, 0.0, 0.1), 5.0, 0.01, 11, 4,
                                         {2.0}, false, 2);
  REQUIRE(series.times.size() == 501);
  CHECK(series.n_paths == 4);
  CHECK(series.exploded_fraction.back() == 0.0);

  RateFit fit = fit_decay_rate(series, 2.0, 0.0, 5.0);
  CHECK(std::fabs(fit.slope - (-0.5)) < 0.01);
  CHECK(std::fabs(fit.intercept - std::log(4.0)) < 0.01);
  CHECK(fit.residual_rms < 1e-3);
  CHECK(fit.n_points == 501);

  // identical paths: the ensemble spread is numerically zero
  CHECK(series.se[0].back() < 1e-6);
}

TEST_CASE("reduction is bitwise independent of the worker count") {
  RunConfig cfg = example5_preset();
  const ControlSchedule sched = make_schedule(1.0, 0.6, 0.01);
  MomentSeries w1 = ensemble_moments(cfg.system, sched, 2.0, 1e-3, 4321, 160, {2.0, 4.0}, true, 1);
  MomentSeries w4 = ensemble_moments(cfg.system, sched, 2.0, 1e-3, 4321, 160, {2.0, 4.0}, true, 4);
  MomentSeries w7 = ensemble_moments(cfg.system, sched, 2.0, 1e-3, 4321, 160, {2.0, 4.0}, true, 7);

  REQUIRE(w1.times.size() == w4.times.size());
  REQUIRE(w1.times.size() == w7.times.size());
  for (size_t qi = 0; qi < 2; ++qi) {
    for (size_t r = 0; r < w1.times.size(); ++r) {
      CHECK(w1.m[qi][r] == w4.m[qi][r]);
      CHECK(w1.m[qi][r] == w7.m[qi][r]);
      CHECK(w1.se[qi][r] == w4.se[qi][r]);
      CHECK(w1.se[qi][r] == w7.se[qi][r]);
    }
  }
  for (size_t r = 0; r < w1.times.size(); ++r)
    CHECK(w1.exploded_fraction[r] == w4.exploded_fraction[r]);
}

TEST_CASE("standard errors shrink like the square root of the ensemble size") {
  RunConfig cfg = example5_preset();
  const ControlSchedule sched = make_schedule(1.0, 0.0, 0.01);
  MomentSeries small = ensemble_moments(cfg.system, sched, 1.0, 1e-3, 99, 50, {2.0}, false, 2);
  MomentSeries large = ensemble_moments(cfg.system, sched, 1.0, 1e-3, 99, 200, {2.0}, false, 2);

  const double se_small = small.se[0].back();
  const double se_large = large.se[0].back();
  REQUIRE(se_small > 0.0);
  REQUIRE(se_large > 0.0);
  const double ratio = se_small / se_large;
  CHECK(ratio > 1.4);
  CHECK(ratio < 2.9);
}

TEST_CASE("an ensemble where every path explodes raises an estimation error") {
  SystemSpec sys = linear_system(0.0, 1e60, 1.0);
  CHECK_THROWS_AS(ensemble_moments(sys, make_schedule(1.0, 0.0, 1e-3), 0.05, 1e-3, 5, 8, {2.0},
                                   false, 2),
                  EstimationError);
}

TEST_CASE("certificate comparison verdicts") {
  RateFit fit;
  fit.qbar = 2.0;

  fit.slope = -0.8;
  CompareReport pass = compare_to_certificate(fit, -0.0999, true);
  CHECK(pass.status == CompareStatus::Pass);
  CHECK(pass.empirical == -0.8);
  CHECK(pass.certified == -0.0999);
  CHECK_FALSE(pass.message.empty());
  CHECK(std::string(compare_status_name(pass.status)) == "pass");

  // decay at exactly (1 - tolerance) of the certified exponent still passes
  fit.slope = -0.0999 * 0.75;
  CHECK(compare_to_certificate(fit, -0.0999, true).status == CompareStatus::Pass);

  fit.slope = -0.05;
  CompareReport outside = compare_to_certificate(fit, -0.0999, false);
  CHECK(outside.status == CompareStatus::OutsideCertificate);
  CHECK(std::string(compare_status_name(outside.status)) == "outside certificate");

  CompareReport violation = compare_to_certificate(fit, -0.0999, true);
  CHECK(violation.status == CompareStatus::ViolationCandidate);
  CHECK(std::string(compare_status_name(violation.status)) == "violation candidate");

  // a flat trajectory is reported as no decay even outside the certificate
  fit.slope = -0.005;
  CHECK(compare_to_certificate(fit, -0.0999, false).status == CompareStatus::NoDecay);
  CHECK(std::string(compare_status_name(CompareStatus::NoDecay)) == "no decay");

  // with zero tolerance the same fit is a violation candidate
  fit.slope = -0.09;
  CHECK(compare_to_certificate(fit, -0.0999, true, 0.0).status ==
        CompareStatus::ViolationCandidate);
  CHECK(compare_to_certificate(fit, -0.0999, true).status == CompareStatus::Pass);
}

TEST_CASE("moment CSV layout") {
  SystemSpec sys = linear_system(-0.25, 0.0, 2.0);
  MomentSeries series = ensemble_moments(sys, make_schedule(1.0, 0.0, 0.1), 0.2, 0.01, 11, 2,
                                         {2.0, 4.0}, false, 1);
  std::string csv = moments_csv(series);
  const std::string header = csv.substr(0, csv.find('\n'));
  CHECK(header == "t,m_2,se_2,m_4,se_4,exploded_fraction");

  size_t lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == series.times.size() + 1);
  CHECK(csv.find("nan") == std::string::npos);
  CHECK(csv.substr(header.size() + 1, 2) == "0,");

  MomentSeries tiny;
  tiny.times = {0.0};
  tiny.qbars = {4.5};
  tiny.m = {{1.0}};
  tiny.se = {{0.0}};
  tiny.exploded_fraction = {0.0};
  tiny.n_paths = 1;
  CHECK(moments_csv(tiny).rfind("t,m_4.5,se_4.5,exploded_fraction\n", 0) == 0);
}

TEST_CASE("long horizons are decimated onto a bounded output grid") {
  SystemSpec sys = linear_system(-0.25, 0.0, 2.0);
  MomentSeries series = ensemble_moments(sys, make_schedule(1.0, 0.0, 0.1), 5.0, 1e-3, 11, 2,
                                         {2.0}, false, 2, 100);
  REQUIRE(series.times.size() == 101);
  CHECK(series.times[1] == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(series.times.back() == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("moment estimation validates its inputs") {
  SystemSpec sys = linear_system(-0.25, 0.0, 2.0);
  const ControlSchedule sched = make_schedule(1.0, 0.0, 0.1);

  CHECK_THROWS_AS(ensemble_moments(sys, sched, 1.0, 0.01, 1, 0, {2.0}, false), ConfigError);
  CHECK_THROWS_AS(ensemble_moments(sys, sched, 1.0, 0.01, 1, 2, {}, false), ValidationError);
  CHECK_THROWS_AS(ensemble_moments(sys, sched, 1.0, 0.01, 1, 2, {1.5}, false), ValidationError);
  CHECK_THROWS_AS(ensemble_moments(sys, sched, 1.0, 0.01, 1, 2, {7.0}, false), ValidationError);
  CHECK_THROWS_AS(ensemble_moments(sys, sched, 1.0, 0.01, 1, 2, {2.0}, false, 1, 1),
                  ValidationError);

  MomentSeries series = ensemble_moments(sys, sched, 1.0, 0.01, 1, 2, {2.0}, false, 1);
  CHECK_THROWS_AS(fit_decay_rate(series, 2.0, 0.5, 0.5), ValidationError);
  CHECK_THROWS_AS(fit_decay_rate(series, 3.0, 0.0, 1.0), ValidationError);
  CHECK_THROWS_AS(fit_decay_rate(series, 2.0, 0.0, 0.05), ValidationError);

  // a trajectory that is identically zero has no log-moment to fit
  SystemSpec zero = linear_system(-0.25, 0.0, 0.0);
  MomentSeries flat = ensemble_moments(zero, sched, 1.0, 0.01, 1, 2, {2.0}, false, 1);
  CHECK_THROWS_AS(fit_decay_rate(flat, 2.0, 0.0, 1.0), EstimationError);
}
