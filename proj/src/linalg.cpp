#include "sddestab/linalg.hpp"

#include <cmath>
#include <cstddef>

#include "sddestab/errors.hpp"

namespace sddestab {

SquareMatrix SquareMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  SquareMatrix m(static_cast<int>(rows.size()));
  for (int i = 0; i < m.n; ++i) {
    if (static_cast<int>(rows[i].size()) != m.n)
      throw ValidationError("matrix rows have inconsistent lengths");
    for (int j = 0; j < m.n; ++j) m.at(i, j) = rows[i][j];
  }
  return m;
}

double determinant(SquareMatrix m) {
  double det = 1.0;
  for (int col = 0; col < m.n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < m.n; ++r)
      if (std::fabs(m.at(r, col)) > std::fabs(m.at(pivot, col))) pivot = r;
    if (m.at(pivot, col) == 0.0) return 0.0;
    if (pivot != col) {
      for (int j = 0; j < m.n; ++j) std::swap(m.at(pivot, j), m.at(col, j));
      det = -det;
    }
    det *= m.at(col, col);
    for (int r = col + 1; r < m.n; ++r) {
      double f = m.at(r, col) / m.at(col, col);
      for (int j = col; j < m.n; ++j) m.at(r, j) -= f * m.at(col, j);
    }
  }
  return det;
}

std::vector<double> solve_linear(SquareMatrix a, std::vector<double> b) {
  if (static_cast<int>(b.size()) != a.n)
    throw ValidationError("solve_linear: dimension mismatch");
  const int n = a.n;
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::fabs(a.at(r, col)) > std::fabs(a.at(pivot, col))) pivot = r;
    if (a.at(pivot, col) == 0.0) throw ValidationError("solve_linear: singular matrix");
    if (pivot != col) {
      for (int j = 0; j < n; ++j) std::swap(a.at(pivot, j), a.at(col, j));
      std::swap(b[pivot], b[col]);
    }
    for (int r = col + 1; r < n; ++r) {
      double f = a.at(r, col) / a.at(col, col);
      for (int j = col; j < n; ++j) a.at(r, j) -= f * a.at(col, j);
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a.at(i, j) * x[j];
    x[i] = s / a.at(i, i);
  }
  return x;
}

bool is_nonsingular_m_matrix(const SquareMatrix& a) {
  if (a.n <= 0 || a.a.size() != static_cast<size_t>(a.n) * a.n)
    throw ValidationError("is_nonsingular_m_matrix: matrix is not square");
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j)
      if (i != j && a.at(i, j) > 0.0) return false;  // not a Z-matrix
  // leading principal minors must all be positive
  for (int k = 1; k <= a.n; ++k) {
    SquareMatrix sub(k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) sub.at(i, j) = a.at(i, j);
    if (determinant(sub) <= 0.0) return false;
  }
  return true;
}

std::vector<double> solve_weights(const SquareMatrix& a) {
  if (!is_nonsingular_m_matrix(a))
    throw CertificateError("solve_weights: matrix is not a nonsingular M-matrix");
  std::vector<double> ones(a.n, 1.0);
  std::vector<double> theta = solve_linear(a, ones);
  double worst = 0.0;
  for (int i = 0; i < a.n; ++i) {
    if (theta[i] <= 0.0) throw CertificateError("solve_weights: nonpositive component");
    double r = -1.0;
    for (int j = 0; j < a.n; ++j) r += a.at(i, j) * theta[j];
    worst = std::max(worst, std::fabs(r));
  }
  if (worst >= 1e-10) throw CertificateError("solve_weights: residual too large");
  return theta;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("fit_line: bad input sizes");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw ValidationError("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / denom;
  f.intercept = (sy - f.slope * sx) / n;
  double ss = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - (f.intercept + f.slope * x[i]);
    ss += r * r;
  }
  f.rms = std::sqrt(ss / n);
  return f;
}

}  // namespace sddestab
