#ifndef SDDESTAB_CERTIFY_HPP
#define SDDESTAB_CERTIFY_HPP

#include <optional>
#include <string>
#include <vector>

#include "sddestab/linalg.hpp"
#include "sddestab/model.hpp"

namespace sddestab {

// Per-mode control design gains: row 1 bounds x(f+u) + |g|^2/2, row 2 bounds
// x(f+u) + (q1/2)|g|^2, each by k*|x|^2 + l*|y|^2 - beta*|x|^p + g*|y|^p.
struct ModeGains {
  double k1 = 0.0, l1 = 0.0, beta1 = 0.0, g1 = 0.0;
  double k2 = 0.0, l2 = 0.0, beta2 = 0.0, g2 = 0.0;
};

/// Aggregated design data: the two comparison matrices, their weight vectors,
// and the weight extremes used throughout the rate chain.
struct DesignData {
  std::vector<ModeGains> gains;
  SquareMatrix A1{0};
  SquareMatrix A2{0};
  std::vector<double> w2; // weight on |x|^2 per mode
  std::vector<double> wq; // weight on |x|^(q1+1) per mode
  double a1 = 0.0;        // min w2
  double a2 = 0.0;        // max w2
  double a3 = 0.0;        // max wq
};

// Builds A1 = -2 diag(k1) - Gamma, A2 = -(q1+1) diag(k2) - Gamma and solves
// the all-ones systems. Throws CertificateError if either matrix is not a
// nonsingular M-matrix or a weight fails to come out positive.
DesignData build_design(const GeneratorMatrix& generator, const std::vector<ModeGains>& gains,
                        const GrowthParams& growth);

struct ZetaConstants {
  double z[6] = {0, 0, 0, 0, 0, 0};
  // the four admissibility checks, each as margin = rhs_slack - lhs
  bool ok1 = false, ok2 = false, ok3 = false, ok4 = false;
  double margin1 = 0.0, margin2 = 0.0, margin3 = 0.0, margin4 = 0.0;
  bool all_pass() const { return ok1 && ok2 && ok3 && ok4; }
};

ZetaConstants zeta_constants(const DesignData& design, const GrowthParams& growth, double h_star);

struct GridSpec {
  double radius = 5.0;
  int points_per_axis = 401;
};

struct CheckResult {
  bool pass = false;
  double worst_violation = 0.0; // max over the grid of LHS - RHS
  double worst_x = 0.0, worst_y = 0.0;
  int worst_mode = 0;              // 0-based
  bool asymptotic_violation = false; // leading form positive along some ray
  std::string label;
};

// Grid check of the two per-mode design inequalities above. Polynomial
// coefficient models only; callback models raise UnsupportedModelError.
CheckResult verify_design_inequalities(const SystemSpec& spec, const DesignData& design,
                                       const GridSpec& grid);

// Grid check of the dissipativity bound
//   x f + ((q-1)/2)|g|^2 <= K(|x|^2+|y|^2) - alpha1|x|^p + alpha2|y|^p.
CheckResult verify_dissipativity(const SystemSpec& spec, const GridSpec& grid);

// Supplied rate constants and the comparison polynomial W (even powers of |x|).
struct RateConstants {
  double gamma1 = 1.0, gamma2 = 0.0, gamma3 = 0.0;
  double gamma4 = 0.0, gamma5 = 0.0, gamma6 = 0.0;
  double gamma4p = 0.0, gamma5p = 0.0, gamma6p = 0.0;
  double gamma7 = 0.0, gamma8 = 0.0;
  std::vector<std::pair<int, double>> W; // (exponent, coefficient), exponents even

  double gamma_bar() const; // 2 * max(gamma5, gamma6, gamma5p, gamma6p)
  double eval_W(double s) const;
};

// Grid check of the controlled-window and rest-window generator bounds plus
// the W sandwich gamma7|x|^m <= W <= gamma8(|x|^2 + |x|^m), m = q1 + p - 1.
CheckResult verify_rate_inequalities(const SystemSpec& spec, const DesignData& design,
                                     const RateConstants& rates, const GridSpec& grid);

struct BoundednessResult {
  bool condition = false;
  double margin = 0.0; // alpha1 - alpha2 (q-2+p h*)/(p+q-2)
  double alpha_bar1 = 0.0;
  double alpha_bar2 = 0.0;
  double lambda = 0.0;
  double residual = 0.0; // |abar1 - lambda - h* e^{lambda tau}(abar2 + lambda)|
};

// Moment-boundedness margin and the positive root of
// abar1 - lambda = h* e^{lambda tau} (abar2 + lambda), found by bisection.
BoundednessResult boundedness_certificate(const GrowthParams& growth, double h_star, double tau);

struct DeltaBound {
  double delta_max = 0.0;
  double terms[3] = {0, 0, 0};
  int binding = 0; // index of the smallest term
};

/// Admissible observation-gap bound: the minimum of
//   sqrt(gamma1 gamma2)/(2L),  gamma1 gamma3/(2L^2),
//   [d + sqrt(d^2 + 16 L^4 (L^2 /\ gamma1(gamma4 - gbar h*)))]/(16 L^4),
// with d = min generator diagonal. Throws CertificateError when
// gamma4 - gbar h* <= 0 (quadratic margin exhausted).
DeltaBound delta_bound(double L, double gamma1, double gamma2, double gamma3, double min_diag,
                       double gamma4, double gamma_bar, double h_star);

struct CConstants {
  double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0, c5 = 0.0;
  double eps_cap = 0.0;
  bool within_cap = false;
  bool feasible = false; // c1,c2,c3,c5 > 0 and c4 <= min(c1,c2,c3), within cap
  double min_c123 = 0.0;
};

CConstants c_constants(const DesignData& design, const RateConstants& rates, double eps,
                       double delta, double tau, double h_star, double L, double min_diag);

struct RateResult {
  bool certified = false;
  double mu = 0.0;
  double theta_threshold = 0.0;
};

// theta_threshold = (1 - eps/c5) T; mu = eps - c5 (1 - theta/T) above it.
RateResult certified_rate(double eps, double c5, double period, double theta);

struct EpsilonOpt {
  double eps_star = 0.0;
  double mu_star = 0.0;
  CConstants at_opt;
};

// Maximizes mu(eps) = eps - C5(eps)(1 - theta/T) over feasible eps via a
// 1000-point grid scan (shrinking the range tenfold while no feasible point
// exists), golden-section refinement, and a final bisection onto the
// feasibility boundary. Throws CertificateError if no feasible eps is found.
EpsilonOpt optimize_epsilon(const DesignData& design, const RateConstants& rates, double delta,
                            double tau, double h_star, double L, double min_diag, double theta,
                            double period);

/// Decay exponent for the q_bar-th moment: ((q - q_bar)/(q - 2)) mu.
// Each q_bar must lie in [2, q).
std::vector<std::pair<double, double>> moment_rate_table(double mu, double q,
                                                         const std::vector<double>& qbars);

enum class GronwallStatus { Holds, Violated, Inconclusive };

struct GronwallResult {
  GronwallStatus status = GronwallStatus::Inconclusive;
  double bound = 0.0;     // closed-form cap C1 + (C2/lambda)(e^{ld}-1)/(e^{ld}-1-alpha)
  double max_value = 0.0; // max over steps of e^{-k lambda delta} b_k
  double alpha = 0.0;
};

// Discrete Gronwall recursion b_k = C1 + (C2/lambda) e^{k lambda delta}
// + alpha S_k, S_{k+1} = S_k + b_k, checking e^{-k lambda delta} b_k against
// the closed-form cap. Inconclusive when e^{-lambda delta}(1 + alpha) >= 1.
GronwallResult gronwall_oracle(double C1, double C2, double C3, double lambda, double delta,
                               long n_steps);

// Full certificate for one system + schedule, aggregating everything above.
struct StabilityCertificate {
  DesignData design;
  ZetaConstants zeta;
  CheckResult design_check;
  CheckResult dissipativity_check;
  CheckResult rate_check;
  BoundednessResult boundedness;
  RateConstants rates;
  DeltaBound delta_max;
  double delta = 0.0; // certificate observation gap
  bool delta_admissible = false;
  double epsilon = 1.0;
  CConstants constants;
  RateResult rate;
  std::optional<EpsilonOpt> optimized; // absent if optimization failed
  double h_star = 0.0;
  double tau = 0.0;
  double period = 0.0, theta = 0.0;
  double gamma_bar = 0.0;
  double gamma_margin = 0.0; // min(1, gamma4) - gamma_bar * h_star
  bool gamma_margin_ok = false;
  std::vector<std::pair<double, double>> rate_table; // (q_bar, exponent)

  bool all_conditions_pass() const;
  bool pass() const; // all conditions and theta > theta_threshold
};

StabilityCertificate certify(const SystemSpec& spec, const std::vector<ModeGains>& gains,
                             const RateConstants& rates, const ControlSchedule& schedule,
                             double cert_delta, double epsilon, const GridSpec& grid,
                             const std::vector<double>& qbars);

// JSON report with every constant, every check with margins, and the rate table.
std::string certificate_json(const StabilityCertificate& cert);

} // namespace sddestab

#endif // SDDESTAB_CERTIFY_HPP
