#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "sddestab/certify.hpp"
#include "sddestab/config.hpp"
#include "sddestab/errors.hpp"
#include "sddestab/model.hpp"
#include "sddestab/rng.hpp"

using namespace sddestab;

namespace {

constexpr double kHStar = 20.0 / 19.0; // benchmark delay: min slope of t - h(t) is 0.95
constexpr double kTau = 0.2;
constexpr double kL = 9.0;
constexpr double kMinDiag = -2.0;

DesignData preset_design(const RunConfig& cfg) {
  return build_design(cfg.system.generator, cfg.gains, cfg.system.growth);
}

ControlSchedule make_schedule(double period, double width, double obs_gap) {
  ControlSchedule s;
  s.period = period;
  s.width = width;
  s.obs_gap = obs_gap;
  return s;
}

SystemSpec callback_system() {
  SystemSpec s;
  s.generator = GeneratorMatrix::from_rows({{0.0}});
  CallbackModel cb;
  cb.dim = 1;
  cb.drift = [](const std::vector<double>& x, const std::vector<double>&, int, double,
                std::vector<double>& out) { out[0] = -x[0]; };
  cb.diffusion = [](const std::vector<double>&, const std::vector<double>&, int, double,
                    std::vector<double>& out) { out[0] = 0.0; };
  s.coeffs = cb;
  s.delay = DelayFunction::constant(0.15);
  s.growth = example5_preset().system.growth;
  s.history.constant = {1.0};
  s.history.r0 = 0;
  return s;
}

} // namespace

TEST_CASE("design matrices and weights match the benchmark") {
  RunConfig cfg = example5_preset();
  DesignData d = preset_design(cfg);

  REQUIRE(d.A1.n == 2);
  CHECK(d.A1.at(0, 0) == doctest::Approx(16.8).epsilon(1e-12));
  CHECK(d.A1.at(0, 1) == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(d.A1.at(1, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(d.A1.at(1, 1) == doctest::Approx(17.0).epsilon(1e-12));
  CHECK(d.A2.at(0, 0) == doctest::Approx(31.6).epsilon(1e-12));
  CHECK(d.A2.at(1, 1) == doctest::Approx(33.0).epsilon(1e-12));

  REQUIRE(d.w2.size() == 2);
  REQUIRE(d.wq.size() == 2);
  CHECK(d.w2[0] == doctest::Approx(19.0 / 283.6).epsilon(1e-12));
  CHECK(d.w2[1] == doctest::Approx(17.8 / 283.6).epsilon(1e-12));
  CHECK(d.wq[0] == doctest::Approx(35.0 / 1040.8).epsilon(1e-12));
  CHECK(d.wq[1] == doctest::Approx(32.6 / 1040.8).epsilon(1e-12));

  // the published two-digit values
  CHECK(std::fabs(d.w2[0] - 0.067) < 1e-3);
  CHECK(std::fabs(d.w2[1] - 0.063) < 1e-3);
  CHECK(std::fabs(d.wq[0] - 0.0336) < 1e-3);
  CHECK(std::fabs(d.wq[1] - 0.0313) < 1e-3);

  CHECK(d.a1 == d.w2[1]);
  CHECK(d.a2 == d.w2[0]);
  CHECK(d.a3 == d.wq[0]);

  std::vector<ModeGains> short_gains(1);
  CHECK_THROWS_AS(build_design(cfg.system.generator, short_gains, cfg.system.growth),
                  ValidationError);

  // positive k1 destroys the M-matrix structure
  std::vector<ModeGains> bad = cfg.gains;
  bad[0].k1 = 5.0;
  CHECK_THROWS_AS(build_design(cfg.system.generator, bad, cfg.system.growth), CertificateError);
}

TEST_CASE("zeta constants and admissibility margins match the benchmark") {
  RunConfig cfg = example5_preset();
  DesignData d = preset_design(cfg);
  ZetaConstants z = zeta_constants(d, cfg.system.growth, kHStar);

  const double expected[6] = {0.05648801, 1.59114954, 0.12050776,
                              0.11902383, 1.59732896, 0.21048424};
  for (int i = 0; i < 6; ++i) CHECK(std::fabs(z.z[i] - expected[i]) < 1e-6);

  // published roundings
  CHECK(std::fabs(z.z[0] - 0.0567) < 1e-3);
  CHECK(std::fabs(z.z[1] - 1.5913) < 1e-3);
  CHECK(std::fabs(kHStar * z.z[2] - 0.1273) < 1e-3);

  CHECK(z.ok1);
  CHECK(z.ok2);
  CHECK(z.ok3);
  CHECK(z.ok4);
  CHECK(z.all_pass());
  CHECK(z.margin1 > 0.0);
  CHECK(z.margin2 > 0.0);
  CHECK(z.margin3 > 0.0);
  CHECK(z.margin4 > 0.0);

  CHECK_THROWS_AS(zeta_constants(d, cfg.system.growth, 0.9), ValidationError);
}

TEST_CASE("design inequalities hold on the grid and detect violations") {
  RunConfig cfg = example5_preset();
  DesignData d = preset_design(cfg);
  GridSpec grid; // radius 5, 401 points

  CheckResult ok = verify_design_inequalities(cfg.system, d, grid);
  CHECK(ok.pass);
  CHECK(ok.worst_violation <= 1e-9);
  CHECK_FALSE(ok.asymptotic_violation);

  // demanding a much stronger quartic decay than the drift provides must fail
  std::vector<ModeGains> bad = cfg.gains;
  bad[0].beta1 = 50.0;
  DesignData dbad = build_design(cfg.system.generator, bad, cfg.system.growth);
  CheckResult fail = verify_design_inequalities(cfg.system, dbad, grid);
  CHECK_FALSE(fail.pass);
  CHECK(fail.worst_violation > 0.0);

  CHECK_THROWS_AS(verify_design_inequalities(callback_system(), d, grid), UnsupportedModelError);
}

TEST_CASE("dissipativity bound holds and detects violations") {
  RunConfig cfg = example5_preset();
  GridSpec grid;
  CheckResult ok = verify_dissipativity(cfg.system, grid);
  CHECK(ok.pass);
  CHECK(ok.worst_violation <= 1e-9);

  RunConfig harder = example5_preset();
  harder.system.growth.alpha1 = 13.0; // exceeds the weakest mode's cubic coefficient
  CheckResult fail = verify_dissipativity(harder.system, grid);
  CHECK_FALSE(fail.pass);
  CHECK(fail.asymptotic_violation);

  CHECK_THROWS_AS(verify_dissipativity(callback_system(), grid), UnsupportedModelError);
}

TEST_CASE("rate inequalities hold and are sensitive to tightened constants") {
  RunConfig cfg = example5_preset();
  DesignData d = preset_design(cfg);
  GridSpec grid;

  CheckResult ok = verify_rate_inequalities(cfg.system, d, cfg.rates, grid);
  CHECK(ok.pass);
  CHECK(ok.worst_violation <= 1e-9);

  // the quadratic decay constant is at its sharp value
  RateConstants r4 = cfg.rates;
  r4.gamma4 *= 1.2;
  CHECK_FALSE(verify_rate_inequalities(cfg.system, d, r4, grid).pass);

  // the lower comparison constant equals the leading coefficient of W
  RateConstants r7 = cfg.rates;
  r7.gamma7 *= 1.2;
  CheckResult f7 = verify_rate_inequalities(cfg.system, d, r7, grid);
  CHECK_FALSE(f7.pass);

  // sweep every tightening direction; at least the two sharp ones must flip
  int flips = 0;
  for (int which = 0; which < 8; ++which) {
    RateConstants r = cfg.rates;
    switch (which) {
      case 0: r.gamma4 *= 1.2; break;
      case 1: r.gamma5 *= 0.8; break;
      case 2: r.gamma6 *= 0.8; break;
      case 3: r.gamma4p *= 1.2; break;
      case 4: r.gamma5p *= 0.8; break;
      case 5: r.gamma6p *= 0.8; break;
      case 6: r.gamma7 *= 1.2; break;
      case 7: r.gamma8 *= 0.8; break;
    }
    if (!verify_rate_inequalities(cfg.system, d, r, grid).pass) ++flips;
  }
  CHECK(flips >= 2);
}

TEST_CASE("boundedness certificate matches the benchmark") {
  RunConfig cfg = example5_preset();
  BoundednessResult b = boundedness_certificate(cfg.system.growth, kHStar, kTau);
  CHECK(b.condition);
  CHECK(std::fabs(b.margin - 9.2346491) < 1e-6);
  CHECK(std::fabs(b.alpha_bar1 - 73.0916667) < 1e-6);
  CHECK(std::fabs(b.alpha_bar2 - 8.0266667) < 1e-6);
  CHECK(b.lambda > 6.9);
  CHECK(b.lambda < 7.3);
  CHECK(b.residual < 1e-8);

  GrowthParams degenerate = cfg.system.growth;
  degenerate.alpha2 = 0.0;
  BoundednessResult b0 = boundedness_certificate(degenerate, kHStar, kTau);
  CHECK(b0.condition);
  CHECK(b0.margin == doctest::Approx(degenerate.alpha1).epsilon(1e-12));
  CHECK(b0.alpha_bar2 == 0.0);
  CHECK(b0.lambda > 0.0);
  CHECK(b0.residual < 1e-8);

  CHECK_THROWS_AS(boundedness_certificate(cfg.system.growth, 0.9, kTau), ValidationError);
  CHECK_THROWS_AS(boundedness_certificate(cfg.system.growth, kHStar, 0.0), ValidationError);
}

TEST_CASE("admissible observation gap bound matches the benchmark") {
  RunConfig cfg = example5_preset();
  const RateConstants& r = cfg.rates;
  const double gbar = r.gamma_bar();
  CHECK(std::fabs(gbar - 0.2463588) < 1e-6);

  DeltaBound b = delta_bound(kL, r.gamma1, r.gamma2, r.gamma3, kMinDiag, r.gamma4, gbar, kHStar);
  CHECK(b.delta_max == doctest::Approx(0.002 / 162.0).epsilon(1e-8));
  CHECK(b.binding == 1);
  CHECK(b.terms[0] == doctest::Approx(std::sqrt(0.001) / 18.0).epsilon(1e-12));
  CHECK(b.terms[2] > 0.0026);
  CHECK(b.terms[2] < 0.00261);

  // harder Lipschitz constants shrink the bound
  DeltaBound bl18 = delta_bound(18.0, r.gamma1, r.gamma2, r.gamma3, kMinDiag, r.gamma4, gbar, kHStar);
  DeltaBound bl90 = delta_bound(90.0, r.gamma1, r.gamma2, r.gamma3, kMinDiag, r.gamma4, gbar, kHStar);
  CHECK(bl18.delta_max < b.delta_max);
  CHECK(bl90.delta_max < bl18.delta_max);

  // looser free constants can only widen it
  DeltaBound bg2 = delta_bound(kL, r.gamma1, 4.0 * r.gamma2, r.gamma3, kMinDiag, r.gamma4, gbar, kHStar);
  CHECK(bg2.delta_max >= b.delta_max);
  DeltaBound bg3 = delta_bound(kL, r.gamma1, r.gamma2, 2.0 * r.gamma3, kMinDiag, r.gamma4, gbar, kHStar);
  CHECK(bg3.delta_max == doctest::Approx(2.0 * b.delta_max).epsilon(1e-12));

  CHECK_THROWS_AS(delta_bound(kL, r.gamma1, r.gamma2, r.gamma3, kMinDiag, 0.25, gbar, kHStar),
                  CertificateError);
  CHECK_THROWS_AS(delta_bound(kL, r.gamma1, r.gamma2, r.gamma3, 0.5, r.gamma4, gbar, kHStar),
                  ValidationError);
}

TEST_CASE("rate chain constants at the benchmark point") {
  RunConfig cfg = example5_preset();
  DesignData d = preset_design(cfg);
  CConstants c = c_constants(d, cfg.rates, 1.0, 1e-5, kTau, kHStar, kL, kMinDiag);

  CHECK(std::fabs(c.c1 - 0.8016652) < 5e-6);
  CHECK(std::fabs(c.c2 - 0.8175580) < 5e-6);
  CHECK(std::fabs(c.c3 - 0.8174881) < 5e-6);
  CHECK(std::fabs(c.c4 - 0.1583702) < 5e-6);
  CHECK(std::fabs(c.c5 - 1.1250596) < 5e-6);

  // published roundings
  CHECK(std::fabs(c.min_c123 - 0.8017) < 1e-3);
  CHECK(std::fabs(c.c4 - 0.1583) < 1e-3);
  CHECK(std::fabs(c.c5 - 1.1251) < 1e-3);

  CHECK(c.min_c123 == c.c1);
  CHECK(std::fabs(c.eps_cap - 49999.969) < 0.01);
  CHECK(c.within_cap);
  CHECK(c.feasible);

  RateResult rr = certified_rate(1.0, c.c5, 1.0, 0.2);
  CHECK(rr.certified);
  CHECK(std::fabs(rr.theta_threshold - 0.1112) < 1e-4);
  CHECK(std::fabs(rr.mu - 0.0999) < 1e-4);
  CHECK(rr.mu == doctest::Approx(c.c5 * (0.2 - rr.theta_threshold)).epsilon(1e-14));

  // exactly zero at the threshold, strictly increasing above it
  CHECK(certified_rate(1.0, c.c5, 1.0, rr.theta_threshold).mu == 0.0);
  RateResult r3 = certified_rate(1.0, c.c5, 1.0, 0.3);
  CHECK(r3.mu > rr.mu);
  CHECK((r3.mu - rr.mu) / 0.1 == doctest::Approx(c.c5).epsilon(1e-9));
  CHECK(certified_rate(1.0, c.c5, 1.0, 1.0).mu == doctest::Approx(1.0).epsilon(1e-12));

  CHECK_THROWS_AS(certified_rate(0.0, c.c5, 1.0, 0.2), ValidationError);
  CHECK_THROWS_AS(c_constants(d, cfg.rates, 1.0, 0.0, kTau, kHStar, kL, kMinDiag),
                  ValidationError);
}

TEST_CASE("epsilon optimization pushes to the feasibility boundary") {
  RunConfig cfg = example5_preset();
  DesignData d = preset_design(cfg);
  EpsilonOpt opt = optimize_epsilon(d, cfg.rates, 1e-5, kTau, kHStar, kL, kMinDiag, 0.6, 1.0);

  CHECK(opt.at_opt.feasible);
  CHECK(opt.eps_star > 4.70);
  CHECK(opt.eps_star < 4.80);
  CHECK(opt.mu_star > 4.15);
  CHECK(opt.mu_star < 4.30);
  CHECK(std::fabs(opt.mu_star - (opt.eps_star - 0.4 * opt.at_opt.c5)) < 1e-9);

  // nudging epsilon past the boundary loses feasibility
  CConstants beyond =
      c_constants(d, cfg.rates, opt.eps_star + 1e-6, 1e-5, kTau, kHStar, kL, kMinDiag);
  CHECK_FALSE(beyond.feasible);

  // ten-percent moves never improve the certified rate
  for (double scale : {0.9, 1.1}) {
    const double eps = scale * opt.eps_star;
    CConstants c = c_constants(d, cfg.rates, eps, 1e-5, kTau, kHStar, kL, kMinDiag);
    if (!c.feasible) continue;
    RateResult r = certified_rate(eps, c.c5, 1.0, 0.6);
    if (r.certified) CHECK(r.mu <= opt.mu_star + 1e-9);
  }
}

TEST_CASE("the rate at eps 1.4149 is a feasible value but not the constrained maximum") {
  RunConfig cfg = example5_preset();
  DesignData d = preset_design(cfg);
  CConstants c = c_constants(d, cfg.rates, 1.4149, 1e-5, kTau, kHStar, kL, kMinDiag);
  REQUIRE(c.feasible);
  RateResult r = certified_rate(1.4149, c.c5, 1.0, 0.6);
  REQUIRE(r.certified);
  CHECK(std::fabs(r.mu - 0.9550) < 5e-3);

  // the objective keeps improving up to the feasibility boundary
  EpsilonOpt opt = optimize_epsilon(d, cfg.rates, 1e-5, kTau, kHStar, kL, kMinDiag, 0.6, 1.0);
  CHECK(opt.mu_star > r.mu + 3.0);
}

TEST_CASE("optimizing at full-width control maximizes feasible epsilon") {
  RunConfig cfg = example5_preset();
  DesignData d = preset_design(cfg);
  EpsilonOpt opt = optimize_epsilon(d, cfg.rates, 1e-5, kTau, kHStar, kL, kMinDiag, 1.0, 1.0);
  CHECK(std::fabs(opt.mu_star - opt.eps_star) < 1e-9);
  CHECK(opt.eps_star > 4.70);
  CHECK(opt.eps_star < 4.80);
}

TEST_CASE("moment rate table scales exponents by moment order") {
  auto table = moment_rate_table(0.0999, 7.0, {2.0, 4.0});
  REQUIRE(table.size() == 2);
  CHECK(table[0].first == 2.0);
  CHECK(table[0].second == doctest::Approx(0.0999).epsilon(1e-12));
  CHECK(table[1].first == 4.0);
  CHECK(table[1].second == doctest::Approx(0.6 * 0.0999).epsilon(1e-12));

  auto mid = moment_rate_table(0.0999, 7.0, {4.5});
  CHECK(mid[0].second == doctest::Approx(0.04995).epsilon(1e-12));

  auto near_q = moment_rate_table(0.0999, 7.0, {6.9999999});
  CHECK(std::fabs(near_q[0].second) < 1e-6);

  CHECK_THROWS_AS(moment_rate_table(0.1, 7.0, {7.0}), ValidationError);
  CHECK_THROWS_AS(moment_rate_table(0.1, 7.0, {1.5}), ValidationError);
  CHECK_THROWS_AS(moment_rate_table(0.1, 2.0, {2.0}), ValidationError);
}

TEST_CASE("gronwall recursion oracle") {
  GronwallResult r = gronwall_oracle(1.0, 1.0, 1.0, 1.0, 0.01, 10000);
  CHECK(r.status == GronwallStatus::Holds);
  CHECK(r.alpha == doctest::Approx(0.01 * (std::exp(0.01) - 1.0)).epsilon(1e-12));
  CHECK(r.max_value <= r.bound * (1.0 + 1e-12) + 1e-12);

  // with no feedback term the recursion meets the cap exactly at k = 0
  GronwallResult exact = gronwall_oracle(2.0, 3.0, 0.0, 0.5, 0.01, 1000);
  CHECK(exact.status == GronwallStatus::Holds);
  CHECK(exact.bound == doctest::Approx(2.0 + 3.0 / 0.5).epsilon(1e-14));
  CHECK(exact.max_value == doctest::Approx(exact.bound).epsilon(1e-12));

  // a huge feedback coefficient exhausts the contraction margin
  CHECK(gronwall_oracle(1.0, 1.0, 1e6, 1.0, 0.01, 100).status == GronwallStatus::Inconclusive);

  Rng rng(2718, 0, 3);
  for (int draw = 0; draw < 20; ++draw) {
    const double c1 = 0.1 + 1.9 * rng.uniform();
    const double c2 = 0.1 + 1.9 * rng.uniform();
    const double c3 = rng.uniform();
    const double lambda = 0.5 + 1.5 * rng.uniform();
    const double ld = 1e-4 + (0.02 - 1e-4) * rng.uniform();
    GronwallResult g = gronwall_oracle(c1, c2, c3, lambda, ld / lambda, 10000);
    CHECK(g.status == GronwallStatus::Holds);
  }

  CHECK_THROWS_AS(gronwall_oracle(1.0, 1.0, 1.0, 0.0, 0.01, 100), ValidationError);
}

TEST_CASE("full certificate passes at the benchmark schedule") {
  RunConfig cfg = example5_preset();
  StabilityCertificate cert = certify(cfg.system, cfg.gains, cfg.rates,
                                      make_schedule(1.0, 0.6, 0.01), 1e-5, 1.0, cfg.grid,
                                      {2.0, 4.0});
  CHECK(cert.pass());
  CHECK(cert.all_conditions_pass());
  CHECK(cert.delta_admissible);
  CHECK(cert.h_star == doctest::Approx(kHStar).epsilon(1e-12));
  CHECK(cert.tau == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(std::fabs(cert.gamma_margin - 0.7219689) < 1e-5);
  CHECK(cert.gamma_margin_ok);
  REQUIRE(cert.optimized.has_value());
  CHECK(cert.optimized->mu_star > 4.0);

  // mu at theta = 0.6 and the moment-order table derived from it
  CHECK(std::fabs(cert.rate.mu - 0.5499762) < 1e-4);
  REQUIRE(cert.rate_table.size() == 2);
  CHECK(cert.rate_table[0].second == doctest::Approx(cert.rate.mu).epsilon(1e-12));
  CHECK(cert.rate_table[1].second == doctest::Approx(0.6 * cert.rate.mu).epsilon(1e-12));

  std::string json = certificate_json(cert);
  for (const char* key : {"\"mu\"", "\"delta_max\"", "\"theta_threshold\"", "\"boundedness\"",
                          "\"zeta\"", "\"weights\"", "\"rate_table\"", "\"binding_term\""})
    CHECK(json.find(key) != std::string::npos);
}

TEST_CASE("certificate rates at narrow and sub-threshold widths") {
  RunConfig cfg = example5_preset();
  StabilityCertificate narrow = certify(cfg.system, cfg.gains, cfg.rates,
                                        make_schedule(1.0, 0.2, 0.01), 1e-5, 1.0, cfg.grid, {2.0});
  CHECK(narrow.pass());
  CHECK(std::fabs(narrow.rate.mu - 0.0999) < 1e-4);

  StabilityCertificate below = certify(cfg.system, cfg.gains, cfg.rates,
                                       make_schedule(1.0, 0.05, 0.01), 1e-5, 1.0, cfg.grid, {2.0});
  CHECK_FALSE(below.pass());
  CHECK(below.all_conditions_pass()); // only the width is insufficient
  CHECK_FALSE(below.rate.certified);
  CHECK(below.rate.mu == 0.0);
}

TEST_CASE("certification requires the polynomial model") {
  RunConfig cfg = example5_preset();
  SystemSpec cb = callback_system();
  cb.generator = cfg.system.generator; // two modes, matching the gain table
  CHECK_THROWS_AS(certify(cb, cfg.gains, cfg.rates, make_schedule(1.0, 0.6, 0.01), 1e-5, 1.0,
                          cfg.grid, {2.0}),
                  UnsupportedModelError);
}
