#ifndef SDDESTAB_SIMULATE_HPP
#define SDDESTAB_SIMULATE_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sddestab/markov.hpp"
#include "sddestab/model.hpp"

namespace sddestab {

// One integrated path on a uniform grid. State arrays are flattened
// dim-major: component c of grid point k lives at [k * dim + c].
struct Trajectory {
  double step = 0.0;
  int dim = 1;
  std::vector<double> times;
  std::vector<double> states;
  std::vector<int> mode;           // active mode per grid point (0-based)
  std::vector<double> obs_state;   // last observed state x(v(t)) per grid point
  std::vector<int> obs_mode;       // last observed mode r(v(t)) per grid point
  std::vector<uint8_t> control_on; // 1 where the control term was applied
  bool exploded = false;
  double explosion_time = 0.0; // first non-finite time, valid when exploded

  size_t n_points() const { return times.size(); }
  double x(size_t k, int comp = 0) const {
    return states[k * static_cast<size_t>(dim) + static_cast<size_t>(comp)];
  }
};

// Supplies the standard-normal increment vector for step k (out has dim slots).
using NoiseSource = std::function<void(long k, std::vector<double>& out)>;

// Explicit scheme with drift taming:
//   x_{k+1} = x_k + [ f/(1 + step*|f|) + I(t_k) * u(x(v(t_k)), r(v(t_k)), t_k) ] * step
//           + g(x_k, x_h, r_k, t_k) * sqrt(step) * xi_k
// where x_h is the linearly interpolated delayed state and v(t) the last
// observation instant. The control and diffusion terms are left untamed.
//
// Preconditions: step > 0, obs_gap an integer multiple of step (observation
// instants must lie on the grid), and step <= the delay lower bound so the
// delayed lookup never reads the future. Violations raise ConfigError.
Trajectory integrate(const SystemSpec& spec, const ControlSchedule& schedule, double horizon,
                     double step, uint64_t seed, bool controlled);

// Same scheme with externally supplied mode path and noise. This is the
// deterministic core used by the seeded wrappers and by convergence tests
// that inject coupled increments.
Trajectory integrate_with_inputs(const SystemSpec& spec, const ControlSchedule& schedule,
                                 double horizon, double step, const ModePath& modes,
                                 const NoiseSource& noise, bool controlled);

// Path k of an ensemble: mode path on stream (seed, k, 0), Gaussians on
// stream (seed, k, 1).
Trajectory integrate_path(const SystemSpec& spec, const ControlSchedule& schedule, double horizon,
                          double step, uint64_t master_seed, uint64_t path_index, bool controlled);

std::vector<Trajectory> integrate_ensemble(const SystemSpec& spec, const ControlSchedule& schedule,
                                           double horizon, double step, uint64_t master_seed,
                                           long n_paths, bool controlled);

// CSV with header `t,x,mode,obs_mode,control_on` (x0..x_{d-1} for dim > 1);
// modes are reported 1-based.
std::string trajectory_csv(const Trajectory& traj);

} // namespace sddestab

#endif // SDDESTAB_SIMULATE_HPP
