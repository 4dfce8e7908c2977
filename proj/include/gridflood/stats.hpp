#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace gridflood {

struct OlsFit {
  std::vector<double> coef;  // one per column
  std::vector<double> se;    // OLS standard errors
  double r2 = 0;
  std::vector<double> residuals;
};

// Ordinary least squares via normal equations; X has k <= 4 columns.
inline OlsFit ols(const std::vector<std::vector<double>>& columns, const std::vector<double>& y) {
  const std::size_t k = columns.size();
  const std::size_t n = y.size();
  if (k == 0 || k > 4) throw std::invalid_argument("ols: need 1..4 columns");
  for (const auto& c : columns)
    if (c.size() != n) throw std::invalid_argument("ols: column length mismatch");
  if (n <= k) throw std::invalid_argument("ols: not enough rows");

  double xtx[4][4] = {};
  double xty[4] = {};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t a = 0; a < k; ++a) {
      xty[a] += columns[a][i] * y[i];
      for (std::size_t b = 0; b < k; ++b) xtx[a][b] += columns[a][i] * columns[b][i];
    }
  }

  // Invert XtX by Gauss-Jordan with partial pivoting.
  double aug[4][8] = {};
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) aug[a][b] = xtx[a][b];
    aug[a][k + a] = 1.0;
  }
  for (std::size_t col = 0; col < k; ++col) {
    std::size_t pivot = col;
    for (std::size_t r = col + 1; r < k; ++r)
      if (std::abs(aug[r][col]) > std::abs(aug[pivot][col])) pivot = r;
    if (std::abs(aug[pivot][col]) < 1e-12)
      throw std::invalid_argument("ols: degenerate design matrix");
    if (pivot != col)
      for (std::size_t c = 0; c < 2 * k; ++c) std::swap(aug[col][c], aug[pivot][c]);
    const double inv = 1.0 / aug[col][col];
    for (std::size_t c = 0; c < 2 * k; ++c) aug[col][c] *= inv;
    for (std::size_t r = 0; r < k; ++r) {
      if (r == col) continue;
      const double f = aug[r][col];
      for (std::size_t c = 0; c < 2 * k; ++c) aug[r][c] -= f * aug[col][c];
    }
  }

  OlsFit fit;
  fit.coef.assign(k, 0.0);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) fit.coef[a] += aug[a][k + b] * xty[b];

  double y_mean = 0;
  for (double v : y) y_mean += v;
  y_mean /= static_cast<double>(n);
  double ss_res = 0, ss_tot = 0;
  fit.residuals.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double pred = 0;
    for (std::size_t a = 0; a < k; ++a) pred += fit.coef[a] * columns[a][i];
    fit.residuals[i] = y[i] - pred;
    ss_res += fit.residuals[i] * fit.residuals[i];
    ss_tot += (y[i] - y_mean) * (y[i] - y_mean);
  }
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  const double sigma2 = ss_res / static_cast<double>(n - k);
  fit.se.assign(k, 0.0);
  for (std::size_t a = 0; a < k; ++a) fit.se[a] = std::sqrt(sigma2 * aug[a][k + a]);
  return fit;
}

inline double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0 : s / static_cast<double>(v.size());
}

inline double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Mean with the given fraction trimmed from each tail.
inline double trimmed_mean(std::vector<double> v, double trim_fraction = 0.1) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const auto cut = static_cast<std::size_t>(trim_fraction * static_cast<double>(v.size()));
  double s = 0;
  std::size_t count = 0;
  for (std::size_t i = cut; i < v.size() - cut; ++i) {
    s += v[i];
    ++count;
  }
  return count ? s / static_cast<double>(count) : mean(v);
}

inline double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0;
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// One-sided comparison: true when mean(a) >= mean(b) is compatible with the
// data at the given z (i.e. a is not significantly below b).
inline bool mean_not_below(const std::vector<double>& a, const std::vector<double>& b,
                           double z = 1.645) {
  const double se = std::sqrt(stddev(a) * stddev(a) / static_cast<double>(a.size()) +
                              stddev(b) * stddev(b) / static_cast<double>(b.size()));
  return mean(a) - mean(b) >= -z * se;
}

}  // namespace gridflood
