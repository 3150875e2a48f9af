#ifndef SDDESTAB_MOMENTS_HPP
#define SDDESTAB_MOMENTS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sddestab/model.hpp"

namespace sddestab {

// Ensemble moment estimates E|x(t)|^qbar on a decimated output grid.
struct MomentSeries {
  std::vector<double> times;
  std::vector<double> qbars;
  std::vector<std::vector<double>> m;  // [qbar index][time index]
  std::vector<std::vector<double>> se; // standard errors, same layout
  std::vector<double> exploded_fraction;
  long n_paths = 0;
};

// Streams paths through fixed-size chunks (so the reduction order, and hence
// the floating-point result, is independent of the worker count) and averages
// |x(t)|^qbar over the paths still alive at each output time. Throws
// EstimationError if every path explodes before the horizon.
MomentSeries ensemble_moments(const SystemSpec& spec, const ControlSchedule& schedule,
                              double horizon, double step, uint64_t master_seed, long n_paths,
                              const std::vector<double>& qbars, bool controlled,
                              int n_workers = 0, long max_rows = 2000);

struct RateFit {
  double qbar = 0.0;
  double t0 = 0.0, t1 = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
  long n_points = 0;
};

// Ordinary least squares on log m(t) over [t0, t1]. Requires >= 10 grid
// points and strictly positive moments on the window (EstimationError).
RateFit fit_decay_rate(const MomentSeries& series, double qbar, double t0, double t1);

enum class CompareStatus { Pass, NoDecay, OutsideCertificate, ViolationCandidate };

struct CompareReport {
  CompareStatus status = CompareStatus::Pass;
  double empirical = 0.0;
  double certified = 0.0; // negative decay exponent from the certificate
  std::string message;
};

// The certificate is a guarantee: empirical decay at least (1 - tolerance)
// times the certified exponent passes. Slower decay is flagged, not failed,
// when the run's observation gap exceeds the certified bound.
CompareReport compare_to_certificate(const RateFit& fit, double certified_exponent,
                                     bool delta_admissible, double tolerance = 0.25);

const char* compare_status_name(CompareStatus status);

// CSV with header `t,m_<q1>,se_<q1>,...,exploded_fraction`.
std::string moments_csv(const MomentSeries& series);

} // namespace sddestab

#endif // SDDESTAB_MOMENTS_HPP
