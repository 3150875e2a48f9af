#ifndef SDDESTAB_MARKOV_HPP
#define SDDESTAB_MARKOV_HPP

#include <string>
#include <vector>

#include "sddestab/rng.hpp"

namespace sddestab {

// Transition-rate matrix of the switching chain: off-diagonals >= 0, rows sum
// to zero. Mode indices are 0-based in code; config files and CSV output use
// 1-based mode numbers.
struct GeneratorMatrix {
  int n_modes = 0;
  std::vector<double> rates;  // row-major n_modes x n_modes

  static GeneratorMatrix from_rows(const std::vector<std::vector<double>>& rows);

  double rate(int i, int j) const { return rates[static_cast<size_t>(i) * n_modes + j]; }
  double min_diagonal() const;

  // Throws ValidationError unless off-diagonals are >= 0 and every row sums to
  // zero within 1e-12. On success the diagonal is re-derived from the
  // off-diagonals so row sums are exactly zero.
  void validate_and_normalize();
};

// Piecewise-constant mode trajectory: modes[k] holds on
// [jump_times[k], jump_times[k+1]), last segment extends to `horizon`.
struct ModePath {
  std::vector<double> jump_times;  // jump_times[0] == 0
  std::vector<int> modes;
  double horizon = 0.0;

  // Right-continuous lookup; throws std::out_of_range outside [0, horizon].
  int mode_at(double t) const;
};

// Exact jump-process sampling: holding time in mode i is exponential with rate
// -rate(i,i); the next mode j != i is picked with probability rate(i,j) over
// the total exit rate. A zero diagonal entry makes the mode absorbing.
ModePath sample_mode_path(const GeneratorMatrix& gen, int r0, double horizon, Rng& rng);

// Convenience overload managing its own stream (stream 0 of the given key).
ModePath sample_mode_path(const GeneratorMatrix& gen, int r0, double horizon,
                          std::uint64_t seed, std::uint32_t path_index = 0);

// CSV dump, columns: jump_time,mode (1-based modes).
std::string mode_path_csv(const ModePath& path);

}  // namespace sddestab

#endif
