#ifndef SDDESTAB_MODEL_HPP
#define SDDESTAB_MODEL_HPP

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "sddestab/markov.hpp"

namespace sddestab {

// ---- scalar polynomial coefficient model -----------------------------------
//
// Certificate arithmetic needs explicit structure, so the scalar (d = 1) model
// stores drift/diffusion as monomial tables  sum_k c_k * x^px_k * y^py_k
// where y is the delayed state. Multi-dimensional systems go through the
// callback escape hatch below (simulation only).

struct Monomial {
  int px = 0;
  int py = 0;
  double coeff = 0.0;
};

struct MonomialTable {
  std::vector<Monomial> terms;

  double eval(double x, double y) const;
  // true when every term vanishes at (0,0), i.e. no constant term
  bool vanishes_at_origin() const;
};

struct ScalarModeCoeffs {
  MonomialTable drift;
  MonomialTable diffusion;
  double control_gain = 0.0;  // u(x, i, t) = -control_gain * x
};

// d-dimensional model via callbacks, driven by a single Brownian channel.
// out must be filled with d components.
using VectorField =
    std::function<void(const std::vector<double>& x, const std::vector<double>& y, int mode,
                       double t, std::vector<double>& out)>;

struct CallbackModel {
  int dim = 1;
  VectorField drift;
  VectorField diffusion;
  VectorField control;  // takes observed state as x (y unused)
};

// ---- delay -----------------------------------------------------------------

enum class DelayKind { Constant, Sawtooth, Callback };

// h(t) with range [h_lower, h_upper]. The sawtooth rises from `base` to
// base+amplitude over the first half period, then restarts at `base` and
// falls to base-amplitude over the second half (triangular in each half,
// discontinuous at half-period boundaries).
struct DelayFunction {
  DelayKind kind = DelayKind::Constant;
  double base = 0.0;
  double amplitude = 0.0;
  double period = 1.0;
  double h_lower = 0.0;  // h'
  double h_upper = 0.0;  // tau
  std::optional<double> h_star;  // supplied value wins over estimation
  std::function<double(double)> callback;

  static DelayFunction constant(double value);
  static DelayFunction sawtooth(double base, double amplitude, double period);

  double eval(double t) const;
  // supplied h* if present, else the closed form for this kind, else throws
  double h_star_value() const;
};

// Numerical occupation-density estimate of h* = sup_s mu{t : t - h(t) near s}
// over [0, horizon] with the given bin resolution. Throws ValidationError if
// the sampled delay leaves [h_lower, h_upper].
double h_star_estimate(const DelayFunction& delay, double horizon, double resolution);

// ---- periodic intermittent schedule + sampled observations ------------------

struct ControlSchedule {
  double period = 1.0;      // T
  double width = 0.0;       // theta, control active on [nT, nT + theta)
  double obs_gap = 0.01;    // delta, observations at multiples of delta
  int phase_start = 0;      // first controlled period index

  void validate() const;
};

// 1 iff t lies in a control window (t >= phase_start * T and t mod T < theta).
int indicator_at(const ControlSchedule& s, double t);

// v(t) = floor(t / delta) * delta, with round-off correction so that
// v(v(t)) == v(t) and v(t) <= t < v(t) + delta hold exactly.
double observation_time(const ControlSchedule& s, double t);

// ---- growth / dissipativity parameters --------------------------------------

struct GrowthParams {
  double K = 0.0;       // Khasminskii-bound constant
  double p = 0.0;
  double q = 0.0;
  double q1 = 0.0, q2 = 0.0, q3 = 0.0, q4 = 0.0;
  double alpha1 = 0.0, alpha2 = 0.0;
  double L = 0.0;       // control Lipschitz bound, |u| <= L|x|
  // Constant of the polynomial growth bound |f| <= K_poly(|x|+|y|+|x|^q1+|y|^q2).
  // Defaults to K; kept separate because the dissipativity bound often holds
  // with a much smaller constant than the raw growth bound.
  std::optional<double> K_poly;

  double growth_K() const { return K_poly.value_or(K); }
  double max_exponent() const;  // q1 v q2 v q3 v q4
  void validate() const;        // exponent ordering constraints
};

// ---- initial data ------------------------------------------------------------

struct InitialHistory {
  // either a constant vector or a piecewise-linear table on [-tau, 0]
  std::vector<double> constant;                       // size d (used when table empty)
  std::vector<std::pair<double, std::vector<double>>> table;  // (s, x(s)), s ascending to 0
  int r0 = 0;

  int dim() const;
  // exact evaluation (constant or piecewise-linear interpolation), s <= 0
  std::vector<double> eval(double s) const;
  void validate(double tau) const;
};

// ---- aggregate ----------------------------------------------------------------

struct SystemSpec {
  GeneratorMatrix generator;
  std::variant<std::vector<ScalarModeCoeffs>, CallbackModel> coeffs;
  DelayFunction delay;
  GrowthParams growth;
  InitialHistory history;

  bool is_scalar() const { return std::holds_alternative<std::vector<ScalarModeCoeffs>>(coeffs); }
  const std::vector<ScalarModeCoeffs>& scalar_coeffs() const;
  int dim() const;
  void validate() const;
};

// Coefficient evaluation; mode is 0-based, throws ConfigError when out of
// range. Scalar model ignores t (all concrete systems here are autonomous).
double eval_drift(const SystemSpec& spec, double x, double y, int mode, double t);
double eval_diffusion(const SystemSpec& spec, double x, double y, int mode, double t);
double eval_control(const SystemSpec& spec, double z, int mode, double t);

// Vector versions used by the integrator (work for both model variants).
void eval_drift(const SystemSpec& spec, const std::vector<double>& x,
                const std::vector<double>& y, int mode, double t, std::vector<double>& out);
void eval_diffusion(const SystemSpec& spec, const std::vector<double>& x,
                    const std::vector<double>& y, int mode, double t, std::vector<double>& out);
void eval_control(const SystemSpec& spec, const std::vector<double>& z, int mode, double t,
                  std::vector<double>& out);

double delay_at(const SystemSpec& spec, double t);

}  // namespace sddestab

#endif
