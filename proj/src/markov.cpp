#include "sddestab/markov.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "sddestab/errors.hpp"

namespace sddestab {

GeneratorMatrix GeneratorMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  GeneratorMatrix g;
  g.n_modes = static_cast<int>(rows.size());
  if (g.n_modes == 0) throw ValidationError("generator: empty matrix");
  g.rates.reserve(static_cast<size_t>(g.n_modes) * g.n_modes);
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != g.n_modes)
      throw ValidationError("generator: matrix is not square");
    for (double v : row) g.rates.push_back(v);
  }
  g.validate_and_normalize();
  return g;
}

double GeneratorMatrix::min_diagonal() const {
  double m = 0.0;
  for (int i = 0; i < n_modes; ++i) m = std::min(m, rate(i, i));
  return m;
}

void GeneratorMatrix::validate_and_normalize() {
  for (int i = 0; i < n_modes; ++i) {
    double off = 0.0;
    for (int j = 0; j < n_modes; ++j) {
      if (i == j) continue;
      double v = rate(i, j);
      if (v < 0.0) throw ValidationError("generator: negative off-diagonal rate");
      off += v;
    }
    double row_sum = off + rate(i, i);
    if (std::fabs(row_sum) > 1e-12)
      throw ValidationError("generator: row does not sum to zero");
    rates[static_cast<size_t>(i) * n_modes + i] = -off;  // row sum exactly zero
  }
}

int ModePath::mode_at(double t) const {
  if (t < 0.0 || t > horizon) throw std::out_of_range("mode_at: time outside sampled horizon");
  // linear scan is fine for the few hundred jumps typical here; binary search
  // keeps long uncontrolled runs cheap
  size_t lo = 0, hi = jump_times.size();
  while (hi - lo > 1) {
    size_t mid = (lo + hi) / 2;
    if (jump_times[mid] <= t)
      lo = mid;
    else
      hi = mid;
  }
  return modes[lo];
}

ModePath sample_mode_path(const GeneratorMatrix& gen, int r0, double horizon, Rng& rng) {
  if (r0 < 0 || r0 >= gen.n_modes) throw ValidationError("sample_mode_path: bad initial mode");
  if (horizon <= 0.0) throw ValidationError("sample_mode_path: horizon must be positive");

  ModePath path;
  path.horizon = horizon;
  path.jump_times.push_back(0.0);
  path.modes.push_back(r0);

  double t = 0.0;
  int mode = r0;
  while (true) {
    double exit_rate = -gen.rate(mode, mode);
    if (exit_rate <= 0.0) break;  // absorbing mode
    t += rng.exponential(exit_rate);
    if (t >= horizon) break;
    // embedded chain: pick the next mode by cumulative scan of the row
    double u = rng.uniform() * exit_rate;
    double acc = 0.0;
    int next = -1;
    for (int j = 0; j < gen.n_modes; ++j) {
      if (j == mode) continue;
      acc += gen.rate(mode, j);
      if (u < acc) {
        next = j;
        break;
      }
    }
    if (next < 0) {  // guard against u == exit_rate round-off
      for (int j = gen.n_modes - 1; j >= 0; --j)
        if (j != mode && gen.rate(mode, j) > 0.0) {
          next = j;
          break;
        }
    }
    mode = next;
    path.jump_times.push_back(t);
    path.modes.push_back(mode);
  }
  return path;
}

ModePath sample_mode_path(const GeneratorMatrix& gen, int r0, double horizon,
                          std::uint64_t seed, std::uint32_t path_index) {
  Rng rng(seed, path_index, /*stream=*/0);
  return sample_mode_path(gen, r0, horizon, rng);
}

std::string mode_path_csv(const ModePath& path) {
  std::string out = "jump_time,mode\n";
  char buf[64];
  for (size_t k = 0; k < path.jump_times.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g,%d\n", path.jump_times[k], path.modes[k] + 1);
    out += buf;
  }
  return out;
}

}  // namespace sddestab
