#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fbq/error.hpp"

namespace fbq::detail {

// Bisection on [lo, hi] for the boundary of a predicate that holds near lo and
// fails near hi. Stops at `tol` absolute width or when the midpoint no longer moves.
template <class Pred>
double bisect(Pred&& holds, double lo, double hi, double tol = 1e-14, int max_iter = 400) {
  for (int it = 0; it < max_iter; ++it) {
    if (hi - lo <= tol * std::max(1.0, std::abs(lo) + std::abs(hi)) * 0.5) break;
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (holds(mid)) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct LinearFit {
  std::vector<double> coef;  // intercept first
  double r_squared = 0.0;
  double residual_var = 0.0;  // SSE / (rows - cols)
  std::vector<double> coef_var;  // diagonal of the covariance estimate
};

// Ordinary least squares of y on [1, x_1, ..., x_p] (p <= 3).
inline LinearFit least_squares(std::span<const std::vector<double>> columns,
                               std::span<const double> y) {
  const std::size_t rows = y.size();
  const std::size_t p = columns.size() + 1;
  if (rows <= p) throw DomainError("not enough points for least squares");

  // Centre and scale regressors for conditioning.
  std::vector<double> mean(p, 0.0), scale(p, 1.0);
  double ymean = 0.0;
  for (double v : y) ymean += v;
  ymean /= static_cast<double>(rows);
  for (std::size_t c = 1; c < p; ++c) {
    const auto& col = columns[c - 1];
    double s = 0.0;
    for (double v : col) s += v;
    mean[c] = s / static_cast<double>(rows);
    double ss = 0.0;
    for (double v : col) ss += (v - mean[c]) * (v - mean[c]);
    scale[c] = ss > 0.0 ? std::sqrt(ss) : 1.0;
  }
  const std::size_t q = p - 1;
  std::array<std::array<double, 4>, 3> a{};
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t c = 0; c < q; ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < rows; ++k) {
        s += (columns[r][k] - mean[r + 1]) / scale[r + 1] * (columns[c][k] - mean[c + 1]) / scale[c + 1];
      }
      a[r][c] = s;
    }
    double s = 0.0;
    for (std::size_t k = 0; k < rows; ++k) s += (columns[r][k] - mean[r + 1]) / scale[r + 1] * (y[k] - ymean);
    a[r][q] = s;
  }
  // Inverse of the normal matrix alongside the solve, for coefficient variances.
  std::array<std::array<double, 3>, 3> inv{};
  for (std::size_t r = 0; r < q; ++r) inv[r][r] = 1.0;
  for (std::size_t c = 0; c < q; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < q; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    if (std::abs(a[piv][c]) < 1e-300) throw DomainError("singular least-squares system");
    std::swap(a[c], a[piv]);
    std::swap(inv[c], inv[piv]);
    for (std::size_t r = 0; r < q; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= q; ++k) a[r][k] -= f * a[c][k];
      for (std::size_t k = 0; k < q; ++k) inv[r][k] -= f * inv[c][k];
    }
  }
  LinearFit fit;
  fit.coef.assign(p, 0.0);
  fit.coef_var.assign(p, 0.0);
  double intercept = ymean;
  for (std::size_t c = 0; c < q; ++c) {
    const double beta = a[c][q] / a[c][c] / scale[c + 1];
    fit.coef[c + 1] = beta;
    intercept -= beta * mean[c + 1];
  }
  fit.coef[0] = intercept;

  double sse = 0.0, sst = 0.0;
  for (std::size_t k = 0; k < rows; ++k) {
    double pred = intercept;
    for (std::size_t c = 1; c < p; ++c) pred += fit.coef[c] * columns[c - 1][k];
    sse += (y[k] - pred) * (y[k] - pred);
    sst += (y[k] - ymean) * (y[k] - ymean);
  }
  fit.r_squared = sst > 0.0 ? 1.0 - sse / sst : 1.0;
  fit.residual_var = sse / static_cast<double>(rows - p);
  for (std::size_t c = 0; c < q; ++c) {
    fit.coef_var[c + 1] = fit.residual_var * inv[c][c] / a[c][c] / (scale[c + 1] * scale[c + 1]);
  }
  return fit;
}

}  // namespace fbq::detail
