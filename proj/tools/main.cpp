#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "sddestab/certify.hpp"
#include "sddestab/config.hpp"
#include "sddestab/errors.hpp"
#include "sddestab/markov.hpp"
#include "sddestab/model.hpp"
#include "sddestab/moments.hpp"
#include "sddestab/simulate.hpp"
#include "sddestab/svg.hpp"

namespace fs = std::filesystem;
using namespace sddestab;
using nlohmann::json;

namespace {

std::string fmtg(double v, const char* format = "%.8g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

RunConfig resolve_config(const std::string& config_path, const std::string& preset) {
  if (!config_path.empty() && !preset.empty())
    throw ConfigError("give either --config or --preset, not both");
  if (!config_path.empty()) return load_config(config_path);
  if (preset == "example5") return example5_preset();
  if (!preset.empty()) throw ConfigError("unknown preset '" + preset + "' (available: example5)");
  throw ConfigError("a system is required: pass --config <path> or --preset example5");
}

std::vector<double> parse_qbars(const std::string& text) {
  std::vector<double> out;
  size_t pos = 0;
  while (pos <= text.size()) {
    const size_t comma = text.find(',', pos);
    const std::string tok = text.substr(pos, comma == std::string::npos ? std::string::npos
                                                                        : comma - pos);
    if (tok.empty()) throw ConfigError("--qbar: empty entry in '" + text + "'");
    try {
      size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("--qbar: '" + tok + "' is not a number");
    }
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("--qbar: need at least one moment order");
  return out;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw ConfigError("failed while writing: " + path.string());
}

// ---- certify ----------------------------------------------------------------

int do_certify(RunConfig cfg, const std::vector<double>& qbars, const std::string& out_dir) {
  if (!cfg.has_gains || !cfg.has_rates)
    throw ConfigError("certify requires 'condition_gains' and 'rate_constants' in the config");
  const StabilityCertificate cert = certify(cfg.system, cfg.gains, cfg.rates, cfg.schedule,
                                            cfg.cert_delta, cfg.epsilon, cfg.grid, qbars);
  const std::string report = certificate_json(cert);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "certificate.json", report);
  }
  std::cout << report;
  if (cert.pass()) return 0;

  if (!cert.zeta.all_pass())
    std::cerr << "reason: weighted-coefficient admissibility checks failed\n";
  if (!cert.design_check.pass)
    std::cerr << "reason: per-mode design inequalities failed (worst violation "
              << fmtg(cert.design_check.worst_violation) << ")\n";
  if (!cert.dissipativity_check.pass)
    std::cerr << "reason: dissipativity bound failed (worst violation "
              << fmtg(cert.dissipativity_check.worst_violation) << ")\n";
  if (!cert.rate_check.pass)
    std::cerr << "reason: generator rate inequalities failed (worst violation "
              << fmtg(cert.rate_check.worst_violation) << ")\n";
  if (!cert.boundedness.condition)
    std::cerr << "reason: moment-boundedness margin is not positive ("
              << fmtg(cert.boundedness.margin) << ")\n";
  if (!cert.gamma_margin_ok)
    std::cerr << "reason: quadratic margin exhausted (min(1, gamma4) <= gamma_bar * h_star)\n";
  if (!cert.delta_admissible)
    std::cerr << "reason: delta exceeds delta_max " << fmtg(cert.delta_max.delta_max) << "\n";
  if (!cert.constants.feasible)
    std::cerr << "reason: rate-chain constants infeasible at epsilon " << fmtg(cert.epsilon)
              << "\n";
  if (!cert.rate.certified)
    std::cerr << "reason: theta <= theta_threshold " << fmtg(cert.rate.theta_threshold, "%.4f")
              << "\n";
  return 1;
}

// ---- simulate ---------------------------------------------------------------

int do_simulate(const RunConfig& cfg, double horizon, double step, uint64_t seed, bool controlled,
                const std::string& out_dir, bool want_svg, bool dump_mode_path) {
  const Trajectory traj = integrate(cfg.system, cfg.schedule, horizon, step, seed, controlled);
  const std::string csv = trajectory_csv(traj);
  if (out_dir.empty()) {
    if (want_svg) throw ConfigError("--svg requires --out <dir>");
    if (dump_mode_path) throw ConfigError("--dump-mode-path requires --out <dir>");
    std::cout << csv;
    return 0;
  }
  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "trajectory.csv", csv);
  std::cerr << "wrote " << (fs::path(out_dir) / "trajectory.csv").string() << "\n";
  if (want_svg) {
    write_file(fs::path(out_dir) / "trajectory.svg", trajectory_svg(traj, "state trajectory"));
    std::cerr << "wrote " << (fs::path(out_dir) / "trajectory.svg").string() << "\n";
  }
  if (dump_mode_path) {
    const ModePath path = sample_mode_path(cfg.system.generator, cfg.system.history.r0,
                                           horizon + step, seed, 0);
    write_file(fs::path(out_dir) / "mode_path.csv", mode_path_csv(path));
    std::cerr << "wrote " << (fs::path(out_dir) / "mode_path.csv").string() << "\n";
  }
  return 0;
}

// ---- moments ----------------------------------------------------------------

int do_moments(const RunConfig& cfg, double horizon, double step, long paths, uint64_t seed,
               const std::vector<double>& qbars, bool controlled, const std::string& out_dir,
               bool want_svg) {
  const MomentSeries series = ensemble_moments(cfg.system, cfg.schedule, horizon, step, seed,
                                               paths, qbars, controlled);

  // Certified comparison rate (the cheap constant chain; grid checks live in certify).
  bool have_rate = false;
  double mu = 0.0;
  double dmax = 0.0;
  bool admissible = false;
  if (cfg.has_gains && cfg.has_rates) {
    try {
      const DesignData design = build_design(cfg.system.generator, cfg.gains, cfg.system.growth);
      const double h_star = cfg.system.delay.h_star_value();
      const double tau = cfg.system.delay.h_upper;
      const double min_diag = cfg.system.generator.min_diagonal();
      const DeltaBound db =
          delta_bound(cfg.system.growth.L, cfg.rates.gamma1, cfg.rates.gamma2, cfg.rates.gamma3,
                      min_diag, cfg.rates.gamma4, cfg.rates.gamma_bar(), h_star);
      dmax = db.delta_max;
      admissible = cfg.schedule.obs_gap <= dmax;
      const CConstants cc = c_constants(design, cfg.rates, cfg.epsilon, cfg.cert_delta, tau,
                                        h_star, cfg.system.growth.L, min_diag);
      const RateResult rr =
          certified_rate(cfg.epsilon, cc.c5, cfg.schedule.period, cfg.schedule.width);
      have_rate = cc.feasible && rr.certified;
      mu = rr.mu;
    } catch (const CertificateError& e) {
      std::cerr << "warning: no certified rate available (" << e.what() << ")\n";
    }
  }
  if (cfg.has_gains && cfg.has_rates && !admissible && dmax > 0.0)
    std::cerr << "warning: observation gap " << fmtg(cfg.schedule.obs_gap)
              << " exceeds the certified bound delta_max " << fmtg(dmax)
              << "; the certificate does not apply to this run\n";

  json report;
  report["n_paths"] = paths;
  report["horizon"] = horizon;
  report["step"] = step;
  report["theta"] = cfg.schedule.width;
  report["obs_gap"] = cfg.schedule.obs_gap;
  report["controlled"] = controlled;
  report["window"] = {horizon / 3.0, horizon};
  if (have_rate) {
    report["mu"] = mu;
    report["delta_max"] = dmax;
    report["delta_admissible"] = admissible;
  }
  json fits = json::array();

  bool violation = false;
  std::ostream& line_out = out_dir.empty() ? std::cerr : std::cout;
  for (double qb : qbars) {
    json entry;
    entry["qbar"] = qb;
    std::string status;
    try {
      const RateFit fit = fit_decay_rate(series, qb, horizon / 3.0, horizon);
      entry["slope"] = fit.slope;
      entry["intercept"] = fit.intercept;
      entry["residual_rms"] = fit.residual_rms;
      entry["n_points"] = fit.n_points;
      if (have_rate) {
        const double expo = moment_rate_table(mu, cfg.system.growth.q, {qb})[0].second;
        const CompareReport cmp = compare_to_certificate(fit, -expo, admissible);
        entry["certified"] = -expo;
        status = compare_status_name(cmp.status);
        if (controlled && (cmp.status == CompareStatus::ViolationCandidate ||
                           (cmp.status == CompareStatus::NoDecay && admissible)))
          violation = true;
      } else {
        status = "no certificate";
      }
      line_out << "qbar=" << fmtg(qb, "%g") << ": slope=" << fmtg(fit.slope)
               << (entry.contains("certified")
                       ? " certified=" + fmtg(entry["certified"].get<double>())
                       : std::string())
               << " status=" << status << "\n";
    } catch (const EstimationError& e) {
      status = std::string("fit failed: ") + e.what();
      line_out << "qbar=" << fmtg(qb, "%g") << ": status=" << status << "\n";
    }
    entry["status"] = status;
    fits.push_back(std::move(entry));
  }
  report["fits"] = std::move(fits);

  const std::string csv = moments_csv(series);
  if (out_dir.empty()) {
    if (want_svg) throw ConfigError("--svg requires --out <dir>");
    std::cout << csv;
  } else {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "moments.csv", csv);
    write_file(fs::path(out_dir) / "rate_report.json", report.dump(2) + "\n");
    if (want_svg)
      write_file(fs::path(out_dir) / "moments.svg", moments_svg(series, "moment decay"));
    std::cerr << "wrote " << (fs::path(out_dir) / "moments.csv").string() << " and rate_report.json"
              << (want_svg ? " and moments.svg" : "") << "\n";
  }
  return violation ? 1 : 0;
}

// ---- reproduce --------------------------------------------------------------

struct ReproRow {
  std::string name;
  double computed = 0.0;
  double expected = 0.0;
  double tol = 0.0;
  bool pass = false;
};

int do_reproduce() {
  const RunConfig cfg = example5_preset();
  const GrowthParams& growth = cfg.system.growth;
  const double h_star = cfg.system.delay.h_star_value();
  const double tau = cfg.system.delay.h_upper;
  const double min_diag = cfg.system.generator.min_diagonal();

  std::vector<ReproRow> rows;
  const auto add = [&rows](const std::string& name, double computed, double expected, double tol) {
    rows.push_back({name, computed, expected, tol, std::fabs(computed - expected) <= tol});
  };

  const DesignData design = build_design(cfg.system.generator, cfg.gains, growth);
  add("weight w2[1]", design.w2[0], 0.067, 1e-3);
  add("weight w2[2]", design.w2[1], 0.063, 1e-3);
  add("weight wq[1]", design.wq[0], 0.0336, 1e-3);
  add("weight wq[2]", design.wq[1], 0.0313, 1e-3);

  const ZetaConstants zeta = zeta_constants(design, growth, h_star);
  add("zeta1", zeta.z[0], 0.0567, 1e-3);
  add("zeta2", zeta.z[1], 1.5913, 1e-3);
  add("h_star * zeta3", h_star * zeta.z[2], 0.1273, 1e-3);
  add("zeta checks passing (of 4)",
      (zeta.ok1 ? 1 : 0) + (zeta.ok2 ? 1 : 0) + (zeta.ok3 ? 1 : 0) + (zeta.ok4 ? 1 : 0), 4.0, 0.0);

  const RateConstants& r = cfg.rates;
  add("gamma4", r.gamma4, 0.981294, 1e-9);
  add("gamma5", r.gamma5, 0.06143, 1e-9);
  add("gamma6", r.gamma6, 0.123112, 1e-3);
  add("gamma4'", r.gamma4p, 0.13, 1e-9);
  add("gamma5'", r.gamma5p, 0.05985, 1e-9);
  add("gamma6'", r.gamma6p, 0.123160, 1e-3);
  add("gamma7", r.gamma7, 1.39289664, 1e-9);
  add("gamma8", r.gamma8, 2.86509864, 1e-9);

  const DeltaBound db = delta_bound(growth.L, r.gamma1, r.gamma2, r.gamma3, min_diag, r.gamma4,
                                    r.gamma_bar(), h_star);
  add("delta_max", db.delta_max, 1.2346e-5, 1e-8);

  const CConstants cc =
      c_constants(design, r, 1.0, cfg.cert_delta, tau, h_star, growth.L, min_diag);
  add("min(C1,C2,C3) at eps=1", cc.min_c123, 0.8017, 1e-3);
  add("C4 at eps=1", cc.c4, 0.1583, 1e-3);
  add("C5 at eps=1", cc.c5, 1.1251, 1e-3);

  const RateResult rate02 = certified_rate(1.0, cc.c5, cfg.schedule.period, 0.2);
  add("theta_threshold at eps=1", rate02.theta_threshold, 0.1112, 1e-4);
  add("certified rate (theta=0.2, eps=1)", rate02.mu, 0.0999, 1e-4);

  const EpsilonOpt opt = optimize_epsilon(design, r, cfg.cert_delta, tau, h_star, growth.L,
                                          min_diag, 0.6, cfg.schedule.period);
  add("optimized rate (theta=0.6)", opt.mu_star, 0.9550, 5e-3);

  std::printf("%-36s %15s %15s %9s  %s\n", "quantity", "computed", "stored", "tol", "verdict");
  int n_pass = 0;
  for (const ReproRow& row : rows) {
    std::printf("%-36s %15.8g %15.8g %9.1e  %s\n", row.name.c_str(), row.computed, row.expected,
                row.tol, row.pass ? "PASS" : "FAIL");
    if (row.pass) ++n_pass;
  }
  std::printf("rows passed: %d/%d\n", n_pass, static_cast<int>(rows.size()));
  if (!rows.back().pass) {
    // The one row that legitimately disagrees: report what the optimizer found.
    std::fprintf(stderr,
                 "note: the constrained maximizer is eps* = %.6g with rate %.6g; the stored "
                 "value %.4f is attained at eps = 1.4149 but is not the constrained maximum "
                 "(the rate keeps improving up to the feasibility boundary).\n",
                 opt.eps_star, opt.mu_star, 0.9550);
  }
  return n_pass == static_cast<int>(rows.size()) ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and exponential-stability certificates for hybrid stochastic "
               "delay systems under periodically intermittent sampled-data control"};
  app.require_subcommand(1);

  // shared option storage
  std::string config_path, preset, out_dir, qbar_text = "2";
  double theta = 0.0, delta = 0.0, period = 0.0, epsilon = 0.0;
  double horizon = 15.0, step = 1e-3;
  long paths = 500;
  uint64_t seed = 12345;
  bool controlled = true, want_svg = false, dump_mode_path = false;
  double grid_radius = 0.0;
  int grid_points = 0;

  const auto add_system_opts = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "path to a JSON system config");
    cmd->add_option("--preset", preset, "built-in system (example5)");
  };
  const auto add_schedule_opts = [&](CLI::App* cmd) {
    cmd->add_option("--theta", theta, "control width per period");
    cmd->add_option("--delta", delta, "observation gap override");
    cmd->add_option("--period", period, "control period T");
  };

  CLI::App* c_certify = app.add_subcommand("certify", "verify the stability certificate");
  add_system_opts(c_certify);
  add_schedule_opts(c_certify);
  c_certify->add_option("--epsilon", epsilon, "rate-chain parameter (default from config)");
  c_certify->add_option("--qbar", qbar_text, "comma-separated moment orders for the rate table");
  c_certify->add_option("--out", out_dir, "output directory for certificate.json");
  c_certify->add_option("--grid-radius", grid_radius, "verification box half-width");
  c_certify->add_option("--grid-points", grid_points, "verification grid points per axis");

  CLI::App* c_simulate = app.add_subcommand("simulate", "integrate one controlled path");
  add_system_opts(c_simulate);
  add_schedule_opts(c_simulate);
  c_simulate->add_flag("--controlled,!--uncontrolled", controlled,
                       "apply the intermittent control (default on)");
  c_simulate->add_option("--horizon", horizon, "time horizon");
  c_simulate->add_option("--step", step, "integration step");
  c_simulate->add_option("--seed", seed, "master seed");
  c_simulate->add_option("--out", out_dir, "output directory (default: CSV to stdout)");
  c_simulate->add_flag("--svg", want_svg, "also write an SVG plot (needs --out)");
  c_simulate->add_flag("--dump-mode-path", dump_mode_path,
                       "also write the switching path CSV (needs --out)");

  CLI::App* c_moments = app.add_subcommand("moments", "Monte Carlo moment decay estimation");
  add_system_opts(c_moments);
  add_schedule_opts(c_moments);
  c_moments->add_flag("--controlled,!--uncontrolled", controlled,
                      "apply the intermittent control (default on)");
  c_moments->add_option("--horizon", horizon, "time horizon");
  c_moments->add_option("--step", step, "integration step");
  c_moments->add_option("--paths", paths, "number of Monte Carlo paths");
  c_moments->add_option("--seed", seed, "master seed");
  c_moments->add_option("--qbar", qbar_text, "comma-separated moment orders");
  c_moments->add_option("--epsilon", epsilon, "rate-chain parameter for the certified rate");
  c_moments->add_option("--out", out_dir, "output directory (default: CSV to stdout)");
  c_moments->add_flag("--svg", want_svg, "also write an SVG semilog plot (needs --out)");

  CLI::App* c_reproduce = app.add_subcommand(
      "reproduce", "recompute the built-in benchmark constants against stored values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e); // --help and friends
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (c_reproduce->parsed()) return do_reproduce();

    RunConfig cfg = resolve_config(config_path, preset);
    if (c_certify->count("--theta") || c_simulate->count("--theta") ||
        c_moments->count("--theta"))
      cfg.schedule.width = theta;
    if (c_certify->count("--period") || c_simulate->count("--period") ||
        c_moments->count("--period"))
      cfg.schedule.period = period;
    if (c_certify->count("--epsilon") || c_moments->count("--epsilon")) cfg.epsilon = epsilon;
    if (c_certify->parsed()) {
      if (c_certify->count("--delta")) cfg.cert_delta = delta;
      if (c_certify->count("--grid-radius")) cfg.grid.radius = grid_radius;
      if (c_certify->count("--grid-points")) cfg.grid.points_per_axis = grid_points;
      return do_certify(std::move(cfg), parse_qbars(qbar_text), out_dir);
    }
    if (c_simulate->count("--delta") || c_moments->count("--delta")) cfg.schedule.obs_gap = delta;
    if (c_simulate->parsed())
      return do_simulate(cfg, horizon, step, seed, controlled, out_dir, want_svg, dump_mode_path);
    return do_moments(cfg, horizon, step, paths, seed, parse_qbars(qbar_text), controlled,
                      out_dir, want_svg);
  } catch (const CertificateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const EstimationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
