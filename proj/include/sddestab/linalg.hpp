#ifndef SDDESTAB_LINALG_HPP
#define SDDESTAB_LINALG_HPP

#include <vector>

namespace sddestab {

// Dense square matrix, row-major. The mode counts in play are tiny (N <= 8),
// so plain Gaussian elimination is all we need.
struct SquareMatrix {
  int n = 0;
  std::vector<double> a;  // n*n, row-major

  SquareMatrix() = default;
  explicit SquareMatrix(int size) : n(size), a(static_cast<size_t>(size) * size, 0.0) {}
  static SquareMatrix from_rows(const std::vector<std::vector<double>>& rows);

  double& at(int i, int j) { return a[static_cast<size_t>(i) * n + j]; }
  double at(int i, int j) const { return a[static_cast<size_t>(i) * n + j]; }
};

// Determinant via elimination with partial pivoting.
double determinant(SquareMatrix m);

// Solve A x = b. Throws ValidationError on dimension mismatch or singular A.
std::vector<double> solve_linear(SquareMatrix a, std::vector<double> b);

// Nonpositive off-diagonals and strictly positive leading principal minors.
bool is_nonsingular_m_matrix(const SquareMatrix& a);

// Solve A theta = (1,...,1)^T for an M-matrix A. Throws CertificateError when
// A fails the M-matrix test, and checks positivity + residual of the result.
std::vector<double> solve_weights(const SquareMatrix& a);

// OLS fit y = intercept + slope * x. Returns {slope, intercept, rms residual}.
struct LineFit {
  double slope = 0.0, intercept = 0.0, rms = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace sddestab

#endif
