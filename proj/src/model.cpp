#include "sddestab/model.hpp"

#include <algorithm>
#include <cmath>

#include "sddestab/errors.hpp"

namespace sddestab {

// ---- monomial tables --------------------------------------------------------

double MonomialTable::eval(double x, double y) const {
  double s = 0.0;
  for (const auto& m : terms) {
    double t = m.coeff;
    for (int k = 0; k < m.px; ++k) t *= x;
    for (int k = 0; k < m.py; ++k) t *= y;
    s += t;
  }
  return s;
}

bool MonomialTable::vanishes_at_origin() const {
  for (const auto& m : terms)
    if (m.px == 0 && m.py == 0 && m.coeff != 0.0) return false;
  return true;
}

// ---- delay -------------------------------------------------------------------

DelayFunction DelayFunction::constant(double value) {
  DelayFunction d;
  d.kind = DelayKind::Constant;
  d.base = value;
  d.h_lower = d.h_upper = value;
  d.h_star = 1.0;  // t - h(t) has unit slope
  if (value <= 0.0) throw ValidationError("delay: constant value must be positive");
  return d;
}

DelayFunction DelayFunction::sawtooth(double base, double amplitude, double period) {
  DelayFunction d;
  d.kind = DelayKind::Sawtooth;
  d.base = base;
  d.amplitude = amplitude;
  d.period = period;
  d.h_lower = base - amplitude;
  d.h_upper = base + amplitude;
  if (d.h_lower <= 0.0) throw ValidationError("delay: sawtooth dips to a nonpositive value");
  if (period <= 0.0 || amplitude < 0.0) throw ValidationError("delay: bad sawtooth shape");
  double slope = 2.0 * amplitude / period;  // |dh/dt|
  if (slope >= 1.0) throw ValidationError("delay: sawtooth slope must stay below 1");
  d.h_star = 1.0 / (1.0 - slope);
  return d;
}

double DelayFunction::eval(double t) const {
  switch (kind) {
    case DelayKind::Constant:
      return base;
    case DelayKind::Sawtooth: {
      double phase = std::fmod(t, period);
      if (phase < 0.0) phase += period;
      double half = period / 2.0;
      if (phase < half) return base + amplitude * (phase / half);
      return base - amplitude * ((phase - half) / half);
    }
    case DelayKind::Callback:
      return callback(t);
  }
  throw ValidationError("delay: unknown kind");
}

double DelayFunction::h_star_value() const {
  if (h_star) return *h_star;
  throw ValidationError("delay: h* neither supplied nor derivable; run h_star_estimate");
}

double h_star_estimate(const DelayFunction& delay, double horizon, double resolution) {
  if (horizon <= 0.0 || resolution <= 0.0)
    throw ValidationError("h_star_estimate: horizon and resolution must be positive");
  // Occupation count of u(t) = t - h(t): time spent per bin of u, maximized
  // over bins, which recovers 1/(minimum slope of u) for piecewise-linear
  // delays. Counting restarts at discontinuities of u so that two branches
  // that happen to revisit the same u range are rated separately - the
  // convention under which the constant equals 1/(min slope); a delay jumping
  // downward in u would otherwise inflate isolated bins by the sum of both
  // branch densities.
  const double dt = resolution / 100.0;
  const long n_steps = static_cast<long>(horizon / dt);
  const double lo = -delay.h_upper;
  const long n_bins = static_cast<long>((horizon - lo) / resolution) + 2;
  const double jump_threshold = std::max(20.0 * dt, 0.5 * resolution);

  std::vector<double> occupancy(static_cast<size_t>(n_bins), 0.0);
  std::vector<long> touched;
  double best = 0.0;
  auto flush_branch = [&]() {
    // interior bins only: the first/last bin of a branch is partially covered
    for (size_t i = 1; i + 1 < touched.size(); ++i)
      best = std::max(best, occupancy[static_cast<size_t>(touched[i])]);
    for (long b : touched) occupancy[static_cast<size_t>(b)] = 0.0;
    touched.clear();
  };

  double u_prev = 0.0;
  for (long k = 0; k < n_steps; ++k) {
    double t = (static_cast<double>(k) + 0.5) * dt;
    double h = delay.eval(t);
    if (h < delay.h_lower - 1e-12 || h > delay.h_upper + 1e-12)
      throw ValidationError("h_star_estimate: delay left [h_lower, h_upper]");
    double u = t - h;
    if (k > 0 && std::fabs(u - u_prev) > jump_threshold) flush_branch();
    u_prev = u;
    long bin = static_cast<long>((u - lo) / resolution);
    if (bin >= 0 && bin < n_bins) {
      if (occupancy[static_cast<size_t>(bin)] == 0.0) touched.push_back(bin);
      occupancy[static_cast<size_t>(bin)] += dt;
    }
  }
  flush_branch();
  return best / resolution;
}

// ---- schedule ----------------------------------------------------------------

void ControlSchedule::validate() const {
  if (period <= 0.0) throw ValidationError("schedule: period must be positive");
  if (width < 0.0 || width > period)
    throw ValidationError("schedule: width must lie in [0, period]");
  if (obs_gap <= 0.0) throw ValidationError("schedule: observation gap must be positive");
  if (width > 0.0 && obs_gap > width)
    throw ValidationError("schedule: observation gap must not exceed the control width");
  if (phase_start < 0) throw ValidationError("schedule: phase_start must be >= 0");
}

int indicator_at(const ControlSchedule& s, double t) {
  if (t < 0.0) return 0;
  double n = std::floor(t / s.period);
  // round-off correction mirroring observation_time
  if ((n + 1.0) * s.period <= t) n += 1.0;
  if (n * s.period > t) n -= 1.0;
  if (n < static_cast<double>(s.phase_start)) return 0;
  double offset = t - n * s.period;
  return offset < s.width ? 1 : 0;
}

double observation_time(const ControlSchedule& s, double t) {
  if (t < 0.0) throw ValidationError("observation_time: t must be >= 0");
  double k = std::floor(t / s.obs_gap);
  // floor(t/delta)*delta can land on the wrong side after rounding; nudge so
  // that v(t) <= t < v(t) + delta exactly, which also makes v idempotent
  if ((k + 1.0) * s.obs_gap <= t) k += 1.0;
  if (k * s.obs_gap > t) k -= 1.0;
  return k * s.obs_gap;
}

// ---- growth params -------------------------------------------------------------

double GrowthParams::max_exponent() const { return std::max({q1, q2, q3, q4}); }

void GrowthParams::validate() const {
  if (K <= 0.0 || p <= 0.0 || q <= 0.0 || alpha1 <= 0.0 || alpha2 < 0.0 || L < 0.0)
    throw ValidationError("growth: constants must be positive");
  if (q1 <= 1.0 || q2 < 1.0) throw ValidationError("growth: need q1 > 1 and q2 >= 1");
  double m = max_exponent();
  if (!(q > 2.0 * m) || !(q > p + q1 - 1.0))
    throw ValidationError("growth: q must exceed 2*max(q1..q4) and p+q1-1");
  if (!(p >= 2.0 * m - q1 + 1.0))
    throw ValidationError("growth: p must be at least 2*max(q1..q4) - q1 + 1");
}

// ---- initial history -----------------------------------------------------------

int InitialHistory::dim() const {
  if (!table.empty()) return static_cast<int>(table.front().second.size());
  return static_cast<int>(constant.size());
}

std::vector<double> InitialHistory::eval(double s) const {
  if (table.empty()) return constant;
  if (s <= table.front().first) return table.front().second;
  if (s >= table.back().first) return table.back().second;
  size_t hi = 1;
  while (table[hi].first < s) ++hi;
  const auto& [s0, x0] = table[hi - 1];
  const auto& [s1, x1] = table[hi];
  double w = (s - s0) / (s1 - s0);
  std::vector<double> out(x0.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = x0[i] + w * (x1[i] - x0[i]);
  return out;
}

void InitialHistory::validate(double tau) const {
  if (table.empty()) {
    if (constant.empty()) throw ValidationError("history: no initial data");
    for (double v : constant)
      if (!std::isfinite(v)) throw ValidationError("history: non-finite initial data");
    return;
  }
  if (table.front().first > -tau + 1e-12)
    throw ValidationError("history: table must start at or before -tau");
  if (std::fabs(table.back().first) > 1e-12)
    throw ValidationError("history: table must end at s = 0");
  for (size_t k = 0; k < table.size(); ++k) {
    if (k > 0 && table[k].first <= table[k - 1].first)
      throw ValidationError("history: table times must increase");
    if (table[k].second.size() != table.front().second.size())
      throw ValidationError("history: inconsistent state dimension");
    for (double v : table[k].second)
      if (!std::isfinite(v)) throw ValidationError("history: non-finite initial data");
  }
}

// ---- aggregate ------------------------------------------------------------------

const std::vector<ScalarModeCoeffs>& SystemSpec::scalar_coeffs() const {
  if (!is_scalar())
    throw UnsupportedModelError("operation requires the scalar polynomial model");
  return std::get<std::vector<ScalarModeCoeffs>>(coeffs);
}

int SystemSpec::dim() const {
  if (is_scalar()) return 1;
  return std::get<CallbackModel>(coeffs).dim;
}

void SystemSpec::validate() const {
  if (is_scalar()) {
    const auto& modes = scalar_coeffs();
    if (static_cast<int>(modes.size()) != generator.n_modes)
      throw ValidationError("spec: coefficient table count != number of modes");
    for (const auto& m : modes) {
      if (!m.drift.vanishes_at_origin() || !m.diffusion.vanishes_at_origin())
        throw ValidationError("spec: drift/diffusion must vanish at the origin");
      if (m.control_gain < 0.0) throw ValidationError("spec: negative control gain");
      if (m.control_gain > growth.L + 1e-12)
        throw ValidationError("spec: control gain exceeds the declared bound L");
    }
  }
  if (history.dim() != dim()) throw ValidationError("spec: history dimension mismatch");
  history.validate(delay.h_upper);
  if (delay.h_lower <= 0.0 || delay.h_upper < delay.h_lower)
    throw ValidationError("spec: delay bounds must satisfy 0 < h_lower <= h_upper");
}

namespace {
void check_mode(const SystemSpec& spec, int mode) {
  if (mode < 0 || mode >= spec.generator.n_modes)
    throw ConfigError("unknown mode index");
}
}  // namespace

double eval_drift(const SystemSpec& spec, double x, double y, int mode, double /*t*/) {
  check_mode(spec, mode);
  return spec.scalar_coeffs()[static_cast<size_t>(mode)].drift.eval(x, y);
}

double eval_diffusion(const SystemSpec& spec, double x, double y, int mode, double /*t*/) {
  check_mode(spec, mode);
  return spec.scalar_coeffs()[static_cast<size_t>(mode)].diffusion.eval(x, y);
}

double eval_control(const SystemSpec& spec, double z, int mode, double /*t*/) {
  check_mode(spec, mode);
  return -spec.scalar_coeffs()[static_cast<size_t>(mode)].control_gain * z;
}

void eval_drift(const SystemSpec& spec, const std::vector<double>& x,
                const std::vector<double>& y, int mode, double t, std::vector<double>& out) {
  check_mode(spec, mode);
  if (spec.is_scalar()) {
    out.assign(1, eval_drift(spec, x[0], y[0], mode, t));
    return;
  }
  std::get<CallbackModel>(spec.coeffs).drift(x, y, mode, t, out);
}

void eval_diffusion(const SystemSpec& spec, const std::vector<double>& x,
                    const std::vector<double>& y, int mode, double t, std::vector<double>& out) {
  check_mode(spec, mode);
  if (spec.is_scalar()) {
    out.assign(1, eval_diffusion(spec, x[0], y[0], mode, t));
    return;
  }
  std::get<CallbackModel>(spec.coeffs).diffusion(x, y, mode, t, out);
}

void eval_control(const SystemSpec& spec, const std::vector<double>& z, int mode, double t,
                  std::vector<double>& out) {
  check_mode(spec, mode);
  if (spec.is_scalar()) {
    out.assign(1, eval_control(spec, z[0], mode, t));
    return;
  }
  const auto& cb = std::get<CallbackModel>(spec.coeffs);
  if (cb.control) {
    cb.control(z, z, mode, t, out);
  } else {
    out.assign(static_cast<size_t>(cb.dim), 0.0);
  }
}

double delay_at(const SystemSpec& spec, double t) { return spec.delay.eval(t); }

}  // namespace sddestab
