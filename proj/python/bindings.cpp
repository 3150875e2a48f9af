#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <vector>

#include "sddestab/certify.hpp"
#include "sddestab/config.hpp"
#include "sddestab/model.hpp"
#include "sddestab/moments.hpp"
#include "sddestab/rng.hpp"
#include "sddestab/simulate.hpp"

namespace py = pybind11;
using namespace sddestab;

namespace {

RunConfig preset_with(double theta, double obs_gap) {
  RunConfig cfg = example5_preset();
  cfg.schedule.width = theta;
  cfg.schedule.obs_gap = obs_gap;
  return cfg;
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hybrid stochastic delay systems under periodically intermittent "
            "sampled-data control: simulation and stability certificates";
  m.attr("__version__") = "1.0.0";

  m.def(
      "philox_block",
      [](std::uint64_t key0, std::uint64_t key1, std::uint64_t c0, std::uint64_t c1,
         std::uint64_t c2, std::uint64_t c3) {
        const auto out = philox4x64_block({key0, key1}, {c0, c1, c2, c3});
        return py::make_tuple(out[0], out[1], out[2], out[3]);
      },
      py::arg("key0"), py::arg("key1"), py::arg("c0") = 0, py::arg("c1") = 0, py::arg("c2") = 0,
      py::arg("c3") = 0, "One raw Philox4x64-10 block for the given key and 256-bit counter");

  m.def(
      "gaussians",
      [](std::uint64_t seed, std::uint32_t path_index, std::uint32_t stream, int n) {
        if (n < 0) throw py::value_error("n must be nonnegative");
        Rng rng(seed, path_index, stream);
        std::vector<double> out(static_cast<size_t>(n));
        for (double& v : out) v = rng.gaussian();
        return out;
      },
      py::arg("seed"), py::arg("path_index") = 0, py::arg("stream") = 1, py::arg("n") = 1,
      "Standard normal draws from the (seed, path, stream) generator");

  m.def(
      "certify",
      [](double theta, double delta, double epsilon) {
        RunConfig cfg = example5_preset();
        cfg.schedule.width = theta;
        cfg.cert_delta = delta;
        cfg.epsilon = epsilon;
        const StabilityCertificate cert =
            certify(cfg.system, cfg.gains, cfg.rates, cfg.schedule, cfg.cert_delta, cfg.epsilon,
                    cfg.grid, {2.0});
        py::dict d;
        d["pass"] = cert.pass();
        d["all_conditions_pass"] = cert.all_conditions_pass();
        d["mu"] = cert.rate.mu;
        d["certified"] = cert.rate.certified;
        d["theta_threshold"] = cert.rate.theta_threshold;
        d["delta_max"] = cert.delta_max.delta_max;
        d["delta_admissible"] = cert.delta_admissible;
        d["w2"] = cert.design.w2;
        d["wq"] = cert.design.wq;
        d["c1"] = cert.constants.c1;
        d["c2"] = cert.constants.c2;
        d["c3"] = cert.constants.c3;
        d["c4"] = cert.constants.c4;
        d["c5"] = cert.constants.c5;
        d["boundedness_margin"] = cert.boundedness.margin;
        if (cert.optimized) {
          d["eps_star"] = cert.optimized->eps_star;
          d["mu_star"] = cert.optimized->mu_star;
        }
        d["json"] = certificate_json(cert);
        return d;
      },
      py::arg("theta") = 0.6, py::arg("delta") = 1e-5, py::arg("epsilon") = 1.0,
      "Full certificate for the built-in benchmark system at the given schedule");

  m.def(
      "simulate",
      [](double theta, double obs_gap, double horizon, double step, std::uint64_t seed,
         bool controlled) {
        const RunConfig cfg = preset_with(theta, obs_gap);
        const Trajectory traj = integrate(cfg.system, cfg.schedule, horizon, step, seed,
                                          controlled);
        py::dict d;
        d["t"] = traj.times;
        d["x"] = traj.states; // scalar system: one state per time point
        d["mode"] = traj.mode;
        d["control_on"] = traj.control_on;
        d["exploded"] = traj.exploded;
        return d;
      },
      py::arg("theta") = 0.6, py::arg("obs_gap") = 0.01, py::arg("horizon") = 10.0,
      py::arg("step") = 1e-3, py::arg("seed") = 12345, py::arg("controlled") = true,
      "Integrate one path of the built-in benchmark system");

  m.def(
      "moment_decay",
      [](double theta, double obs_gap, double horizon, double step, long paths,
         std::uint64_t seed, bool controlled) {
        const RunConfig cfg = preset_with(theta, obs_gap);
        const MomentSeries series = ensemble_moments(cfg.system, cfg.schedule, horizon, step,
                                                     seed, paths, {2.0}, controlled);
        const RateFit fit = fit_decay_rate(series, 2.0, horizon / 3.0, horizon);
        py::dict d;
        d["t"] = series.times;
        d["m2"] = series.m[0];
        d["exploded_fraction"] = series.exploded_fraction;
        d["slope"] = fit.slope;
        d["intercept"] = fit.intercept;
        return d;
      },
      py::arg("theta") = 0.6, py::arg("obs_gap") = 0.01, py::arg("horizon") = 6.0,
      py::arg("step") = 1e-3, py::arg("paths") = 64, py::arg("seed") = 12345,
      py::arg("controlled") = true,
      "Mean-square decay estimate for the built-in benchmark system");
}
