#include "sddestab/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "sddestab/errors.hpp"
#include "sddestab/rng.hpp"

namespace sddestab {

namespace {

constexpr double kExplosionThreshold = 1e100;

// Linear interpolation into the unified history: exact initial-function
// evaluation for s <= 0, interpolation between stored grid states afterwards.
void delayed_state(const SystemSpec& spec, const std::vector<double>& states, double step,
                   long n_stored, double s, std::vector<double>& out) {
  const int dim = spec.dim();
  if (s <= 0.0) {
    out = spec.history.eval(s);
    return;
  }
  double pos = s / step;
  long k0 = static_cast<long>(pos);
  if (k0 >= n_stored - 1) k0 = n_stored - 2;
  if (k0 < 0) k0 = 0;
  double w = pos - static_cast<double>(k0);
  if (w < 0.0) w = 0.0;
  if (w > 1.0) w = 1.0;
  const double* a = &states[static_cast<size_t>(k0) * dim];
  const double* b = &states[static_cast<size_t>(k0 + 1) * dim];
  // the first grid state interpolates against the initial value at s = 0
  for (int c = 0; c < dim; ++c) out[static_cast<size_t>(c)] = a[c] + w * (b[c] - a[c]);
}

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

bool finite_and_bounded(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x) || std::fabs(x) > kExplosionThreshold) return false;
  }
  return true;
}

} // namespace

Trajectory integrate_with_inputs(const SystemSpec& spec, const ControlSchedule& schedule,
                                 double horizon, double step, const ModePath& modes,
                                 const NoiseSource& noise, bool controlled) {
  spec.validate();
  schedule.validate();
  if (step <= 0.0) throw ConfigError("integrate: step must be positive");
  if (horizon <= 0.0) throw ConfigError("integrate: horizon must be positive");
  if (step > spec.delay.h_lower + 1e-12)
    throw ConfigError("integrate: step exceeds the delay lower bound; the delayed "
                      "lookup would read the future");
  const long k_obs = std::llround(schedule.obs_gap / step);
  if (k_obs < 1 || std::fabs(static_cast<double>(k_obs) * step - schedule.obs_gap) >
                       1e-9 * schedule.obs_gap)
    throw ConfigError("integrate: observation gap must be a positive integer multiple "
                      "of the step");

  const int dim = spec.dim();
  const long n_steps = static_cast<long>(horizon / step * (1.0 + 1e-12));

  Trajectory traj;
  traj.step = step;
  traj.dim = dim;
  traj.times.reserve(static_cast<size_t>(n_steps) + 1);
  traj.states.reserve((static_cast<size_t>(n_steps) + 1) * dim);
  traj.mode.reserve(static_cast<size_t>(n_steps) + 1);
  traj.obs_state.reserve((static_cast<size_t>(n_steps) + 1) * dim);
  traj.obs_mode.reserve(static_cast<size_t>(n_steps) + 1);
  traj.control_on.reserve(static_cast<size_t>(n_steps) + 1);

  std::vector<double> x = spec.history.eval(0.0);
  std::vector<double> obs_x = x;
  int obs_r = spec.history.r0;

  std::vector<double> xh(static_cast<size_t>(dim)), f(static_cast<size_t>(dim)),
      g(static_cast<size_t>(dim)), u(static_cast<size_t>(dim)), xi(static_cast<size_t>(dim)),
      xnext(static_cast<size_t>(dim));

  const double sqrt_step = std::sqrt(step);
  for (long k = 0; k <= n_steps; ++k) {
    const double t = static_cast<double>(k) * step;
    const int r = modes.mode_at(t);
    if (k % k_obs == 0) { // observation instant: v(t) = t exactly on the grid
      obs_x = x;
      obs_r = r;
    }
    const bool window = indicator_at(schedule, t) != 0;
    const bool apply_control = controlled && window;

    traj.times.push_back(t);
    traj.states.insert(traj.states.end(), x.begin(), x.end());
    traj.mode.push_back(r);
    traj.obs_state.insert(traj.obs_state.end(), obs_x.begin(), obs_x.end());
    traj.obs_mode.push_back(obs_r);
    traj.control_on.push_back(apply_control ? 1 : 0);

    if (k == n_steps) break;

    delayed_state(spec, traj.states, step, k + 1, t - spec.delay.eval(t), xh);
    eval_drift(spec, x, xh, r, t, f);
    eval_diffusion(spec, x, xh, r, t, g);
    const double tame = 1.0 / (1.0 + step * norm(f));
    if (apply_control) {
      eval_control(spec, obs_x, obs_r, t, u);
    } else {
      u.assign(static_cast<size_t>(dim), 0.0);
    }
    noise(k, xi);
    for (int c = 0; c < dim; ++c) {
      const size_t ci = static_cast<size_t>(c);
      xnext[ci] = x[ci] + (f[ci] * tame + u[ci]) * step + g[ci] * sqrt_step * xi[ci];
    }
    if (!finite_and_bounded(xnext)) {
      traj.exploded = true;
      traj.explosion_time = t + step;
      break;
    }
    x = xnext;
  }
  return traj;
}

Trajectory integrate_path(const SystemSpec& spec, const ControlSchedule& schedule, double horizon,
                          double step, uint64_t master_seed, uint64_t path_index,
                          bool controlled) {
  ModePath modes =
      sample_mode_path(spec.generator, spec.history.r0, horizon + step, master_seed, path_index);
  Rng gauss(master_seed, path_index, /*stream=*/1);
  const int dim = spec.dim();
  NoiseSource noise = [&gauss, dim](long, std::vector<double>& out) {
    for (int c = 0; c < dim; ++c) out[static_cast<size_t>(c)] = gauss.gaussian();
  };
  return integrate_with_inputs(spec, schedule, horizon, step, modes, noise, controlled);
}

Trajectory integrate(const SystemSpec& spec, const ControlSchedule& schedule, double horizon,
                     double step, uint64_t seed, bool controlled) {
  return integrate_path(spec, schedule, horizon, step, seed, 0, controlled);
}

std::vector<Trajectory> integrate_ensemble(const SystemSpec& spec, const ControlSchedule& schedule,
                                           double horizon, double step, uint64_t master_seed,
                                           long n_paths, bool controlled) {
  if (n_paths < 1) throw ConfigError("integrate_ensemble: n_paths must be at least 1");
  std::vector<Trajectory> out;
  out.reserve(static_cast<size_t>(n_paths));
  for (long k = 0; k < n_paths; ++k)
    out.push_back(integrate_path(spec, schedule, horizon, step, master_seed,
                                 static_cast<uint64_t>(k), controlled));
  return out;
}

std::string trajectory_csv(const Trajectory& traj) {
  std::string out;
  out.reserve(traj.n_points() * 48 + 64);
  if (traj.dim == 1) {
    out += "t,x,mode,obs_mode,control_on\n";
  } else {
    out += "t";
    for (int c = 0; c < traj.dim; ++c) {
      char col[16];
      std::snprintf(col, sizeof(col), ",x%d", c);
      out += col;
    }
    out += ",mode,obs_mode,control_on\n";
  }
  char buf[64];
  for (size_t k = 0; k < traj.n_points(); ++k) {
    std::snprintf(buf, sizeof(buf), "%.17g", traj.times[k]);
    out += buf;
    for (int c = 0; c < traj.dim; ++c) {
      std::snprintf(buf, sizeof(buf), ",%.17g", traj.x(k, c));
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), ",%d,%d,%d\n", traj.mode[k] + 1, traj.obs_mode[k] + 1,
                  static_cast<int>(traj.control_on[k]));
    out += buf;
  }
  return out;
}

} // namespace sddestab
