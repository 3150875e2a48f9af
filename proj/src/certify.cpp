#include "sddestab/certify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "json.hpp"

#include "sddestab/errors.hpp"

namespace sddestab {

namespace {

// ---------------------------------------------------------------------------
// small bivariate polynomial engine (exponent-keyed, exact assembly)

using Key = std::pair<int, int>;

struct Poly {
  std::map<Key, double> c;

  void add_term(int px, int py, double v) {
    if (v == 0.0) return;
    double& slot = c[{px, py}];
    slot += v;
    if (slot == 0.0) c.erase({px, py});
  }
};

Poly to_poly(const MonomialTable& table) {
  Poly p;
  for (const auto& m : table.terms) p.add_term(m.px, m.py, m.coeff);
  return p;
}

void add_in(Poly& a, const Poly& b, double scale = 1.0) {
  for (const auto& [k, v] : b.c) a.add_term(k.first, k.second, scale * v);
}

Poly mul(const Poly& a, const Poly& b) {
  Poly out;
  for (const auto& [ka, va] : a.c)
    for (const auto& [kb, vb] : b.c)
      out.add_term(ka.first + kb.first, ka.second + kb.second, va * vb);
  return out;
}

// multiply by x^dx * y^dy and scale
Poly shifted(const Poly& a, int dx, int dy, double scale) {
  Poly out;
  for (const auto& [k, v] : a.c) out.add_term(k.first + dx, k.second + dy, scale * v);
  return out;
}

int max_exponent(const Poly& p) {
  int deg = 0;
  for (const auto& [k, v] : p.c) deg = std::max(deg, std::max(k.first, k.second));
  return deg;
}

int total_degree(const Poly& p) {
  int deg = 0;
  for (const auto& [k, v] : p.c) deg = std::max(deg, k.first + k.second);
  return deg;
}

double eval_poly(const Poly& p, const std::vector<double>& xp, const std::vector<double>& yp) {
  double s = 0.0;
  for (const auto& [k, v] : p.c) s += v * xp[static_cast<size_t>(k.first)] * yp[static_cast<size_t>(k.second)];
  return s;
}

// Leading homogeneous form sampled on the unit circle: positive anywhere
// means the inequality eventually fails along that ray no matter the radius.
bool top_form_positive(const Poly& p) {
  const int deg = total_degree(p);
  if (deg <= 0) return false;
  const double scale = [&] {
    double s = 0.0;
    for (const auto& [k, v] : p.c)
      if (k.first + k.second == deg) s = std::max(s, std::fabs(v));
    return s;
  }();
  if (scale == 0.0) return false;
  constexpr int kAngles = 720;
  constexpr double kTwoPi = 6.28318530717958647692528676655900577;
  for (int a = 0; a < kAngles; ++a) {
    const double phi = kTwoPi * (static_cast<double>(a) + 0.5) / kAngles;
    const double cx = std::cos(phi), sy = std::sin(phi);
    double form = 0.0;
    for (const auto& [k, v] : p.c) {
      if (k.first + k.second != deg) continue;
      form += v * std::pow(cx, k.first) * std::pow(sy, k.second);
    }
    if (form > 1e-9 * scale) return true;
  }
  return false;
}

// Max of a family of polynomials (one per mode) over the grid; also flags
// leading-form violations. Pass means every value <= tolerance.
CheckResult grid_check(const std::vector<Poly>& per_mode, const GridSpec& grid,
                       const std::string& label) {
  if (grid.points_per_axis < 2 || grid.radius <= 0.0)
    throw ValidationError("grid check: need radius > 0 and at least 2 points per axis");
  CheckResult result;
  result.label = label;
  result.worst_violation = -std::numeric_limits<double>::infinity();

  int deg = 0;
  for (const auto& p : per_mode) deg = std::max(deg, max_exponent(p));
  std::vector<double> axis(static_cast<size_t>(grid.points_per_axis));
  for (int i = 0; i < grid.points_per_axis; ++i)
    axis[static_cast<size_t>(i)] =
        -grid.radius + 2.0 * grid.radius * static_cast<double>(i) /
                           static_cast<double>(grid.points_per_axis - 1);

  std::vector<double> xp(static_cast<size_t>(deg) + 1), yp(static_cast<size_t>(deg) + 1);
  for (size_t mi = 0; mi < per_mode.size(); ++mi) {
    const Poly& p = per_mode[mi];
    for (double x : axis) {
      xp[0] = 1.0;
      for (int d = 1; d <= deg; ++d) xp[static_cast<size_t>(d)] = xp[static_cast<size_t>(d - 1)] * x;
      for (double y : axis) {
        yp[0] = 1.0;
        for (int d = 1; d <= deg; ++d) yp[static_cast<size_t>(d)] = yp[static_cast<size_t>(d - 1)] * y;
        const double v = eval_poly(p, xp, yp);
        if (v > result.worst_violation) {
          result.worst_violation = v;
          result.worst_x = x;
          result.worst_y = y;
          result.worst_mode = static_cast<int>(mi);
        }
      }
    }
    if (top_form_positive(p)) result.asymptotic_violation = true;
  }
  result.pass = result.worst_violation <= 1e-9 && !result.asymptotic_violation;
  return result;
}

struct ModePolys {
  Poly f, g, u; // drift, diffusion, control as polynomials in (x, y)
};

std::vector<ModePolys> mode_polynomials(const SystemSpec& spec) {
  if (!spec.is_scalar())
    throw UnsupportedModelError("certificate checks require a polynomial coefficient model");
  std::vector<ModePolys> out;
  for (const auto& mode : spec.scalar_coeffs()) {
    ModePolys mp;
    mp.f = to_poly(mode.drift);
    mp.g = to_poly(mode.diffusion);
    mp.u.add_term(1, 0, -mode.control_gain);
    out.push_back(std::move(mp));
  }
  return out;
}

int even_exponent(double value, const char* name) {
  const long r = std::lround(value);
  if (std::fabs(value - static_cast<double>(r)) > 1e-12 || r < 2 || r % 2 != 0)
    throw UnsupportedModelError(std::string("polynomial certificate checks require ") + name +
                                " to be an even integer >= 2");
  return static_cast<int>(r);
}

int odd_exponent(double value, const char* name) {
  const long r = std::lround(value);
  if (std::fabs(value - static_cast<double>(r)) > 1e-12 || r < 1 || r % 2 != 1)
    throw UnsupportedModelError(std::string("polynomial certificate checks require ") + name +
                                " to be an odd integer >= 1");
  return static_cast<int>(r);
}

} // namespace

// ---------------------------------------------------------------------------

DesignData build_design(const GeneratorMatrix& generator, const std::vector<ModeGains>& gains,
                        const GrowthParams& growth) {
  const int n = generator.n_modes;
  if (static_cast<int>(gains.size()) != n)
    throw ValidationError("build_design: one gain row per mode required");
  DesignData d;
  d.gains = gains;
  d.A1 = SquareMatrix(n);
  d.A2 = SquareMatrix(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double gij = generator.rate(i, j);
      d.A1.at(i, j) = -gij;
      d.A2.at(i, j) = -gij;
    }
    d.A1.at(i, i) += -2.0 * gains[static_cast<size_t>(i)].k1;
    d.A2.at(i, i) += -(growth.q1 + 1.0) * gains[static_cast<size_t>(i)].k2;
  }
  d.w2 = solve_weights(d.A1);
  d.wq = solve_weights(d.A2);
  d.a1 = *std::min_element(d.w2.begin(), d.w2.end());
  d.a2 = *std::max_element(d.w2.begin(), d.w2.end());
  d.a3 = *std::max_element(d.wq.begin(), d.wq.end());
  return d;
}

ZetaConstants zeta_constants(const DesignData& design, const GrowthParams& growth, double h_star) {
  if (h_star < 1.0) throw ValidationError("zeta_constants: h_star must be at least 1");
  ZetaConstants z;
  const size_t n = design.gains.size();
  double z1 = 0.0, z2 = std::numeric_limits<double>::infinity(), z3 = 0.0;
  double z4 = 0.0, z5 = std::numeric_limits<double>::infinity(), z6 = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const ModeGains& g = design.gains[i];
    const double w = design.w2[i], wb = design.wq[i];
    z1 = std::max(z1, 2.0 * w * g.l1);
    z2 = std::min(z2, 2.0 * w * g.beta1);
    z3 = std::max(z3, 2.0 * w * g.g1);
    z4 = std::max(z4, (growth.q1 + 1.0) * wb * g.l2);
    z5 = std::min(z5, (growth.q1 + 1.0) * wb * g.beta2);
    z6 = std::max(z6, (growth.q1 + 1.0) * wb * g.g2);
  }
  z.z[0] = z1;
  z.z[1] = z2;
  z.z[2] = z3;
  z.z[3] = z4;
  z.z[4] = z5;
  z.z[5] = z6;
  z.margin1 = 1.0 - h_star * z1;
  z.margin2 = z2 - h_star * z3;
  z.margin3 = 1.0 - z4 * (growth.q1 - 1.0 + 2.0 * h_star) / (growth.q1 + 1.0);
  z.margin4 = z5 - z6 * (growth.q1 + growth.p * h_star) / (growth.p + growth.q1 - 1.0);
  z.ok1 = z.margin1 > 0.0;
  z.ok2 = z.margin2 > 0.0;
  z.ok3 = z.margin3 > 0.0;
  z.ok4 = z.margin4 > 0.0;
  return z;
}

CheckResult verify_design_inequalities(const SystemSpec& spec, const DesignData& design,
                                       const GridSpec& grid) {
  const auto polys = mode_polynomials(spec);
  const int p = even_exponent(spec.growth.p, "p");
  std::vector<Poly> diffs;
  for (size_t i = 0; i < polys.size(); ++i) {
    const ModeGains& g = design.gains[i];
    Poly fu = polys[i].f;
    add_in(fu, polys[i].u);
    const Poly xfu = shifted(fu, 1, 0, 1.0);
    const Poly g2 = mul(polys[i].g, polys[i].g);
    // row 1:  x(f+u) + |g|^2/2 <= k1 x^2 + l1 y^2 - beta1 x^p + g1 y^p
    Poly d1 = xfu;
    add_in(d1, g2, 0.5);
    d1.add_term(2, 0, -g.k1);
    d1.add_term(0, 2, -g.l1);
    d1.add_term(p, 0, g.beta1);
    d1.add_term(0, p, -g.g1);
    diffs.push_back(std::move(d1));
    // row 2:  x(f+u) + (q1/2)|g|^2 <= k2 x^2 + l2 y^2 - beta2 x^p + g2 y^p
    Poly d2 = xfu;
    add_in(d2, g2, spec.growth.q1 / 2.0);
    d2.add_term(2, 0, -g.k2);
    d2.add_term(0, 2, -g.l2);
    d2.add_term(p, 0, g.beta2);
    d2.add_term(0, p, -g.g2);
    diffs.push_back(std::move(d2));
  }
  CheckResult result = grid_check(diffs, grid, "design inequalities");
  result.worst_mode /= 2; // two rows per mode
  return result;
}

CheckResult verify_dissipativity(const SystemSpec& spec, const GridSpec& grid) {
  const auto polys = mode_polynomials(spec);
  const GrowthParams& gr = spec.growth;
  const int p = even_exponent(gr.p, "p");
  std::vector<Poly> diffs;
  for (const auto& mp : polys) {
    Poly d = shifted(mp.f, 1, 0, 1.0); // x f
    add_in(d, mul(mp.g, mp.g), (gr.q - 1.0) / 2.0);
    d.add_term(2, 0, -gr.K);
    d.add_term(0, 2, -gr.K);
    d.add_term(p, 0, gr.alpha1);
    d.add_term(0, p, -gr.alpha2);
    diffs.push_back(std::move(d));
  }
  return grid_check(diffs, grid, "dissipativity bound");
}

double RateConstants::gamma_bar() const {
  return 2.0 * std::max(std::max(gamma5, gamma6), std::max(gamma5p, gamma6p));
}

double RateConstants::eval_W(double s) const {
  double v = 0.0;
  for (const auto& [e, coeff] : W) v += coeff * std::pow(std::fabs(s), e);
  return v;
}

CheckResult verify_rate_inequalities(const SystemSpec& spec, const DesignData& design,
                                     const RateConstants& rates, const GridSpec& grid) {
  const auto polys = mode_polynomials(spec);
  const GrowthParams& gr = spec.growth;
  const int q1 = odd_exponent(gr.q1, "q1");
  const int m = q1 + even_exponent(gr.p, "p") - 1; // W comparison exponent
  Poly wx, wy;
  for (const auto& [e, coeff] : rates.W) {
    if (e < 0 || e % 2 != 0)
      throw ValidationError("rate constants: W exponents must be even and nonnegative");
    wx.add_term(e, 0, coeff);
    wy.add_term(0, e, coeff);
  }

  std::vector<Poly> diffs;
  const int n = spec.generator.n_modes;
  for (int i = 0; i < n; ++i) {
    const size_t si = static_cast<size_t>(i);
    const double w = design.w2[si], wb = design.wq[si];
    const Poly g2 = mul(polys[si].g, polys[si].g);
    const Poly f2 = mul(polys[si].f, polys[si].f);

    Poly switching;
    for (int j = 0; j < n; ++j) {
      const double gij = spec.generator.rate(i, j);
      switching.add_term(2, 0, gij * design.w2[static_cast<size_t>(j)]);
      switching.add_term(q1 + 1, 0, gij * design.wq[static_cast<size_t>(j)]);
    }

    // controlled window: generator bound with the control in the loop plus
    // the observation-error penalty and the f/g compensation terms
    {
      Poly fu = polys[si].f;
      add_in(fu, polys[si].u);
      const Poly xfu = shifted(fu, 1, 0, 1.0);
      Poly lu = shifted(xfu, 0, 0, 2.0 * w);
      add_in(lu, g2, w);
      add_in(lu, shifted(xfu, q1 - 1, 0, (gr.q1 + 1.0) * wb));
      add_in(lu, shifted(g2, q1 - 1, 0, (gr.q1 + 1.0) * wb * gr.q1 / 2.0));
      add_in(lu, switching);

      Poly lhs = lu;
      // (2 w |x| + (q1+1) wb |x|^q1)^2, even powers throughout
      lhs.add_term(2, 0, rates.gamma1 * 4.0 * w * w);
      lhs.add_term(q1 + 1, 0, rates.gamma1 * 4.0 * w * (gr.q1 + 1.0) * wb);
      lhs.add_term(2 * q1, 0, rates.gamma1 * (gr.q1 + 1.0) * (gr.q1 + 1.0) * wb * wb);
      add_in(lhs, f2, rates.gamma2);
      add_in(lhs, g2, rates.gamma3);

      Poly d = lhs;
      d.add_term(2, 0, rates.gamma4);
      d.add_term(0, 2, -rates.gamma5);
      add_in(d, wx);
      add_in(d, wy, -rates.gamma6);
      diffs.push_back(std::move(d));
    }

    // rest window: uncontrolled generator bound
    {
      const Poly xf = shifted(polys[si].f, 1, 0, 1.0);
      Poly lu = shifted(xf, 0, 0, 2.0 * w);
      add_in(lu, g2, w);
      add_in(lu, shifted(xf, q1 - 1, 0, (gr.q1 + 1.0) * wb));
      add_in(lu, shifted(g2, q1 - 1, 0, (gr.q1 + 1.0) * wb * gr.q1 / 2.0));
      add_in(lu, switching);

      Poly d = lu;
      d.add_term(2, 0, -rates.gamma4p);
      d.add_term(0, 2, -rates.gamma5p);
      add_in(d, wx);
      add_in(d, wy, -rates.gamma6p);
      diffs.push_back(std::move(d));
    }
  }

  // W sandwich: gamma7 x^m <= W(x) <= gamma8 (x^2 + x^m)
  {
    Poly low; // gamma7 x^m - W(x) <= 0
    low.add_term(m, 0, rates.gamma7);
    add_in(low, wx, -1.0);
    diffs.push_back(std::move(low));
    Poly high = wx; // W(x) - gamma8 (x^2 + x^m) <= 0
    high.add_term(2, 0, -rates.gamma8);
    high.add_term(m, 0, -rates.gamma8);
    diffs.push_back(std::move(high));
  }

  CheckResult result = grid_check(diffs, grid, "rate inequalities");
  result.worst_mode = std::min(result.worst_mode / 2, n - 1);
  return result;
}

BoundednessResult boundedness_certificate(const GrowthParams& growth, double h_star, double tau) {
  growth.validate();
  if (h_star < 1.0 || tau <= 0.0)
    throw ValidationError("boundedness_certificate: need h_star >= 1 and tau > 0");
  BoundednessResult r;
  const double p = growth.p, q = growth.q;
  r.margin = growth.alpha1 - growth.alpha2 * (q - 2.0 + p * h_star) / (p + q - 2.0);
  r.condition = r.margin > 0.0;
  r.alpha_bar1 = q * growth.alpha1 - growth.alpha2 * q * (q - 2.0) / (p + q - 2.0);
  r.alpha_bar2 = growth.alpha2 * p * q / (p + q - 2.0);
  if (!r.condition) return r;

  // abar1 - lambda = h* e^{lambda tau}(abar2 + lambda): strictly decreasing
  // minus strictly increasing, so a sign change on (0, abar1) brackets the root
  const auto residual = [&](double lam) {
    return r.alpha_bar1 - lam - h_star * std::exp(lam * tau) * (r.alpha_bar2 + lam);
  };
  double lo = 0.0, hi = r.alpha_bar1;
  for (int it = 0; it < 400 && (hi - lo) > 1e-14 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (residual(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  r.lambda = 0.5 * (lo + hi);
  r.residual = std::fabs(residual(r.lambda));
  return r;
}

DeltaBound delta_bound(double L, double gamma1, double gamma2, double gamma3, double min_diag,
                       double gamma4, double gamma_bar, double h_star) {
  if (L <= 0.0 || gamma1 <= 0.0 || gamma2 <= 0.0 || gamma3 <= 0.0 || gamma4 <= 0.0 ||
      gamma_bar <= 0.0 || h_star < 1.0)
    throw ValidationError("delta_bound: rate constants and h_star must be positive");
  if (min_diag > 0.0)
    throw ValidationError("delta_bound: the minimum generator diagonal cannot be positive");
  const double margin = gamma4 - gamma_bar * h_star;
  if (margin <= 0.0)
    throw CertificateError("delta_bound: quadratic margin exhausted (gamma4 <= gamma_bar * h_star)");
  DeltaBound b;
  const double L2 = L * L, L4 = L2 * L2;
  b.terms[0] = std::sqrt(gamma1 * gamma2) / (2.0 * L);
  b.terms[1] = gamma1 * gamma3 / (2.0 * L2);
  b.terms[2] =
      (min_diag + std::sqrt(min_diag * min_diag + 16.0 * L4 * std::min(L2, gamma1 * margin))) /
      (16.0 * L4);
  b.binding = 0;
  for (int i = 1; i < 3; ++i)
    if (b.terms[i] < b.terms[b.binding]) b.binding = i;
  b.delta_max = b.terms[b.binding];
  return b;
}

CConstants c_constants(const DesignData& design, const RateConstants& rates, double eps,
                       double delta, double tau, double h_star, double L, double min_diag) {
  if (delta <= 0.0 || tau <= 0.0 || h_star < 1.0 || L <= 0.0)
    throw ValidationError("c_constants: delta, tau, h_star, L must be positive");
  CConstants c;
  const double L2 = L * L, L4 = L2 * L2;
  c.eps_cap = (L2 + 2.0 * min_diag * delta - 16.0 * L4 * delta * delta) / (2.0 * L2 * delta);
  c.within_cap = eps > 0.0 && eps <= c.eps_cap;
  const double hexp = h_star * std::exp(eps * tau);
  c.c1 = rates.gamma4 - (8.0 * L4 * delta * delta - min_diag * delta) / rates.gamma1 -
         eps * (design.a2 + design.a3) - rates.gamma5 * hexp;
  c.c2 = 1.0 - rates.gamma6 * hexp - eps * design.a3 / rates.gamma7;
  c.c3 = 1.0 - eps * design.a3 / rates.gamma7 - rates.gamma6p * hexp;
  c.c4 = std::max(std::max(rates.gamma5, rates.gamma6), std::max(rates.gamma5p, rates.gamma6p)) *
         hexp;
  c.c5 = rates.gamma4p + eps * (design.a2 + design.a3) +
         (rates.gamma5p - rates.gamma6p) * hexp + 1.0 - eps * design.a3 / rates.gamma7;
  c.min_c123 = std::min(c.c1, std::min(c.c2, c.c3));
  c.feasible = c.within_cap && c.c1 > 0.0 && c.c2 > 0.0 && c.c3 > 0.0 && c.c5 > 0.0 &&
               c.c4 <= c.min_c123;
  return c;
}

RateResult certified_rate(double eps, double c5, double period, double theta) {
  if (eps <= 0.0 || c5 <= 0.0 || period <= 0.0)
    throw ValidationError("certified_rate: eps, c5, period must be positive");
  RateResult r;
  r.theta_threshold = (1.0 - eps / c5) * period;
  r.certified = theta > r.theta_threshold;
  // written as c5*(theta - threshold)/T so the rate vanishes exactly at the
  // threshold instead of inheriting cancellation noise
  r.mu = r.certified ? c5 * (theta - r.theta_threshold) / period : 0.0;
  return r;
}

EpsilonOpt optimize_epsilon(const DesignData& design, const RateConstants& rates, double delta,
                            double tau, double h_star, double L, double min_diag, double theta,
                            double period) {
  const auto eval = [&](double eps) -> std::pair<bool, double> {
    if (eps <= 0.0) return {false, 0.0};
    const CConstants c = c_constants(design, rates, eps, delta, tau, h_star, L, min_diag);
    if (!c.feasible) return {false, 0.0};
    const RateResult r = certified_rate(eps, c.c5, period, theta);
    if (!r.certified) return {false, 0.0};
    return {true, r.mu};
  };

  const double cap =
      c_constants(design, rates, 1.0, delta, tau, h_star, L, min_diag).eps_cap;
  if (cap <= 0.0) throw CertificateError("optimize_epsilon: epsilon cap is nonpositive");

  constexpr int kGrid = 1000;
  double upper = cap;
  int best = -1;
  double best_mu = 0.0, grid_step = 0.0;
  while (upper > 1e-12) {
    grid_step = upper / kGrid;
    best = -1;
    for (int j = 1; j <= kGrid; ++j) {
      const double eps = grid_step * j;
      const auto [ok, mu] = eval(eps);
      if (ok && (best < 0 || mu > best_mu)) {
        best = j;
        best_mu = mu;
      }
    }
    if (best >= 0) break;
    upper /= 10.0;
  }
  if (best < 0) throw CertificateError("optimize_epsilon: no feasible epsilon found");

  // golden-section refinement around the best grid point
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = std::max(grid_step * (best - 1), 1e-300);
  double b = std::min(grid_step * (best + 1), upper);
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  auto score = [&](double eps) {
    const auto [ok, mu] = eval(eps);
    return ok ? mu : -std::numeric_limits<double>::infinity();
  };
  double f1 = score(x1), f2 = score(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-12 * std::max(1.0, b); ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = score(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = score(x1);
    }
  }

  double eps_star = grid_step * best;
  double mu_star = best_mu;
  for (double cand : {x1, x2}) {
    const auto [ok, mu] = eval(cand);
    if (ok && mu > mu_star) {
      eps_star = cand;
      mu_star = mu;
    }
  }

  // the objective increases toward the feasibility boundary whenever the
  // constraint binds; polish by bisecting the boundary above the incumbent
  {
    double lo = eps_star, hi = std::min(upper, grid_step * (best + 1));
    if (!eval(hi).first) {
      while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        if (eval(mid).first)
          lo = mid;
        else
          hi = mid;
      }
      const auto [ok, mu] = eval(lo);
      if (ok && mu > mu_star) {
        eps_star = lo;
        mu_star = mu;
      }
    }
  }

  EpsilonOpt opt;
  opt.eps_star = eps_star;
  opt.mu_star = mu_star;
  opt.at_opt = c_constants(design, rates, eps_star, delta, tau, h_star, L, min_diag);
  return opt;
}

std::vector<std::pair<double, double>> moment_rate_table(double mu, double q,
                                                         const std::vector<double>& qbars) {
  if (q <= 2.0) throw ValidationError("moment_rate_table: q must exceed 2");
  std::vector<std::pair<double, double>> out;
  for (double qb : qbars) {
    if (qb < 2.0 || qb >= q)
      throw ValidationError("moment_rate_table: each moment order must lie in [2, q)");
    out.emplace_back(qb, (q - qb) / (q - 2.0) * mu);
  }
  return out;
}

GronwallResult gronwall_oracle(double C1, double C2, double C3, double lambda, double delta,
                               long n_steps) {
  if (lambda <= 0.0 || delta <= 0.0 || n_steps < 1)
    throw ValidationError("gronwall_oracle: lambda, delta, n_steps must be positive");
  GronwallResult r;
  const double eld = std::exp(lambda * delta);
  r.alpha = C3 * delta * (eld - 1.0) / lambda;
  if (std::exp(-lambda * delta) * (1.0 + r.alpha) >= 1.0) {
    r.status = GronwallStatus::Inconclusive;
    return r;
  }
  r.bound = C1 + (C2 / lambda) * (eld - 1.0) / (eld - 1.0 - r.alpha);
  double S = 0.0;
  double max_a = -std::numeric_limits<double>::infinity();
  for (long k = 0; k < n_steps; ++k) {
    const double growth = std::exp(static_cast<double>(k) * lambda * delta);
    const double b = C1 + (C2 / lambda) * growth + r.alpha * S;
    const double a = b / growth;
    if (a > max_a) max_a = a;
    S += b;
  }
  r.max_value = max_a;
  r.status = max_a <= r.bound * (1.0 + 1e-12) + 1e-12 ? GronwallStatus::Holds
                                                      : GronwallStatus::Violated;
  return r;
}

bool StabilityCertificate::all_conditions_pass() const {
  return zeta.all_pass() && design_check.pass && dissipativity_check.pass && rate_check.pass &&
         boundedness.condition && gamma_margin_ok && delta_admissible && constants.feasible;
}

bool StabilityCertificate::pass() const { return all_conditions_pass() && rate.certified; }

StabilityCertificate certify(const SystemSpec& spec, const std::vector<ModeGains>& gains,
                             const RateConstants& rates, const ControlSchedule& schedule,
                             double cert_delta, double epsilon, const GridSpec& grid,
                             const std::vector<double>& qbars) {
  spec.validate();
  schedule.validate();
  if (cert_delta <= 0.0) throw ValidationError("certify: certificate delta must be positive");
  if (epsilon <= 0.0) throw ValidationError("certify: epsilon must be positive");

  StabilityCertificate cert;
  cert.h_star = spec.delay.h_star_value();
  cert.tau = spec.delay.h_upper;
  cert.period = schedule.period;
  cert.theta = schedule.width;
  cert.rates = rates;
  cert.delta = cert_delta;
  cert.epsilon = epsilon;

  cert.design = build_design(spec.generator, gains, spec.growth);
  cert.zeta = zeta_constants(cert.design, spec.growth, cert.h_star);
  cert.design_check = verify_design_inequalities(spec, cert.design, grid);
  cert.dissipativity_check = verify_dissipativity(spec, grid);
  cert.rate_check = verify_rate_inequalities(spec, cert.design, rates, grid);
  cert.boundedness = boundedness_certificate(spec.growth, cert.h_star, cert.tau);

  cert.gamma_bar = rates.gamma_bar();
  cert.gamma_margin = std::min(1.0, rates.gamma4) - cert.gamma_bar * cert.h_star;
  cert.gamma_margin_ok = cert.gamma_margin > 0.0;

  const double min_diag = spec.generator.min_diagonal();
  cert.delta_max = delta_bound(spec.growth.L, rates.gamma1, rates.gamma2, rates.gamma3, min_diag,
                               rates.gamma4, cert.gamma_bar, cert.h_star);
  cert.delta_admissible = cert_delta <= cert.delta_max.delta_max;

  cert.constants = c_constants(cert.design, rates, epsilon, cert_delta, cert.tau, cert.h_star,
                               spec.growth.L, min_diag);
  cert.rate = certified_rate(epsilon, cert.constants.c5, schedule.period, schedule.width);

  try {
    cert.optimized = optimize_epsilon(cert.design, rates, cert_delta, cert.tau, cert.h_star,
                                      spec.growth.L, min_diag, schedule.width, schedule.period);
  } catch (const CertificateError&) {
    cert.optimized.reset();
  }

  cert.rate_table = moment_rate_table(cert.rate.mu, spec.growth.q, qbars);
  return cert;
}

std::string certificate_json(const StabilityCertificate& cert) {
  using nlohmann::json;
  json j;
  j["h_star"] = cert.h_star;
  j["tau"] = cert.tau;
  j["schedule"] = {{"period", cert.period}, {"theta", cert.theta}};

  json weights;
  weights["w2"] = cert.design.w2;
  weights["wq"] = cert.design.wq;
  weights["a1"] = cert.design.a1;
  weights["a2"] = cert.design.a2;
  weights["a3"] = cert.design.a3;
  j["weights"] = weights;

  json zeta;
  for (int i = 0; i < 6; ++i) zeta["zeta" + std::to_string(i + 1)] = cert.zeta.z[i];
  zeta["checks"] = json::array();
  const char* exprs[4] = {
      "1 > h_star*zeta1", "zeta2 > h_star*zeta3", "1 > zeta4*(q1-1+2*h_star)/(q1+1)",
      "zeta5 > zeta6*(q1 + p*h_star)/(p + q1 - 1)"};
  const bool oks[4] = {cert.zeta.ok1, cert.zeta.ok2, cert.zeta.ok3, cert.zeta.ok4};
  const double margins[4] = {cert.zeta.margin1, cert.zeta.margin2, cert.zeta.margin3,
                             cert.zeta.margin4};
  for (int i = 0; i < 4; ++i)
    zeta["checks"].push_back({{"expression", exprs[i]}, {"pass", oks[i]}, {"margin", margins[i]}});
  j["zeta"] = zeta;

  const auto check_json = [](const CheckResult& c) {
    return json{{"label", c.label},
                {"pass", c.pass},
                {"worst_violation", c.worst_violation},
                {"worst_x", c.worst_x},
                {"worst_y", c.worst_y},
                {"worst_mode", c.worst_mode + 1},
                {"asymptotic_violation", c.asymptotic_violation}};
  };
  j["checks"] = {check_json(cert.design_check), check_json(cert.dissipativity_check),
                 check_json(cert.rate_check)};

  j["boundedness"] = {{"condition", cert.boundedness.condition},
                      {"margin", cert.boundedness.margin},
                      {"alpha_bar1", cert.boundedness.alpha_bar1},
                      {"alpha_bar2", cert.boundedness.alpha_bar2},
                      {"lambda", cert.boundedness.lambda},
                      {"residual", cert.boundedness.residual}};

  j["rate_constants"] = {{"gamma1", cert.rates.gamma1},   {"gamma2", cert.rates.gamma2},
                         {"gamma3", cert.rates.gamma3},   {"gamma4", cert.rates.gamma4},
                         {"gamma5", cert.rates.gamma5},   {"gamma6", cert.rates.gamma6},
                         {"gamma4p", cert.rates.gamma4p}, {"gamma5p", cert.rates.gamma5p},
                         {"gamma6p", cert.rates.gamma6p}, {"gamma7", cert.rates.gamma7},
                         {"gamma8", cert.rates.gamma8}};
  j["gamma_bar"] = cert.gamma_bar;
  j["gamma_margin"] = {{"value", cert.gamma_margin}, {"pass", cert.gamma_margin_ok}};

  j["delta"] = {{"value", cert.delta},
                {"admissible", cert.delta_admissible},
                {"delta_max", cert.delta_max.delta_max},
                {"terms", {cert.delta_max.terms[0], cert.delta_max.terms[1],
                           cert.delta_max.terms[2]}},
                {"binding_term", cert.delta_max.binding + 1}};

  j["epsilon"] = cert.epsilon;
  j["constants"] = {{"c1", cert.constants.c1},
                    {"c2", cert.constants.c2},
                    {"c3", cert.constants.c3},
                    {"c4", cert.constants.c4},
                    {"c5", cert.constants.c5},
                    {"min_c123", cert.constants.min_c123},
                    {"eps_cap", cert.constants.eps_cap},
                    {"feasible", cert.constants.feasible}};
  j["rate"] = {{"certified", cert.rate.certified},
               {"mu", cert.rate.mu},
               {"theta_threshold", cert.rate.theta_threshold}};
  if (cert.optimized) {
    j["optimized"] = {{"eps_star", cert.optimized->eps_star},
                      {"mu_star", cert.optimized->mu_star},
                      {"c5", cert.optimized->at_opt.c5}};
  }
  json table = json::array();
  for (const auto& [qb, rate] : cert.rate_table)
    table.push_back({{"qbar", qb}, {"exponent", rate}});
  j["rate_table"] = table;
  j["all_conditions_pass"] = cert.all_conditions_pass();
  j["pass"] = cert.pass();
  return j.dump(2) + "\n";
}

} // namespace sddestab
