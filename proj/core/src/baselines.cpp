#include "recnn/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "recnn/chisq.hpp"
#include "recnn/error.hpp"

namespace recnn {

namespace {

constexpr double kRidge = 1e-9;
constexpr double kVarianceFloor = 1e-12;

void check_pair(const Raster& t1, const Raster& t2) {
  if (!t1.same_geometry(t2)) {
    throw DimensionError("T1 is " + std::to_string(t1.width) + "x" + std::to_string(t1.height) +
                         "x" + std::to_string(t1.bands) + " but T2 is " +
                         std::to_string(t2.width) + "x" + std::to_string(t2.height) + "x" +
                         std::to_string(t2.bands));
  }
}

ChangeScore score_raster(const Raster& like) { return Raster(like.width, like.height, 1); }

std::vector<double> weighted_mean(const Raster& r, std::span<const double> w, double total) {
  const std::size_t n = r.pixels();
  std::vector<double> m(r.bands, 0.0);
  for (std::size_t b = 0; b < r.bands; ++b) {
    const auto band = r.band(b);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w[i] * band[i];
    m[b] = s / total;
  }
  return m;
}

Matrix weighted_cov(const Raster& x, const std::vector<double>& mx, const Raster& y,
                    const std::vector<double>& my, std::span<const double> w, double total) {
  const std::size_t n = x.pixels();
  Matrix c(x.bands, y.bands);
  for (std::size_t i = 0; i < x.bands; ++i) {
    const auto xi = x.band(i);
    for (std::size_t j = 0; j < y.bands; ++j) {
      const auto yj = y.band(j);
      double s = 0.0;
      for (std::size_t p = 0; p < n; ++p) s += w[p] * (xi[p] - mx[i]) * (yj[p] - my[j]);
      c(i, j) = s / total;
    }
  }
  return c;
}

Matrix factor(const Matrix& cov, const char* which, bool& regularized) {
  for (double v : cov.data) {
    if (!std::isfinite(v)) throw NumericalError(std::string(which) + " covariance is not finite");
  }
  Matrix lower;
  if (cholesky(cov, lower)) return lower;
  Matrix ridged = cov;
  for (std::size_t i = 0; i < cov.rows; ++i) ridged(i, i) += kRidge;
  if (!cholesky(ridged, lower)) {
    throw NumericalError(std::string(which) + " covariance is singular even with a ridge of 1e-9");
  }
  regularized = true;
  return lower;
}

// Flip so the entry of largest magnitude is positive.
void orient(Matrix& m, std::size_t col) {
  std::size_t best = 0;
  for (std::size_t r = 1; r < m.rows; ++r)
    if (std::abs(m(r, col)) > std::abs(m(best, col))) best = r;
  if (m(best, col) < 0.0)
    for (std::size_t r = 0; r < m.rows; ++r) m(r, col) = -m(r, col);
}

}  // namespace

ChangeScore cva(const Raster& t1, const Raster& t2) {
  check_pair(t1, t2);
  ChangeScore out = score_raster(t1);
  for (std::size_t i = 0; i < t1.pixels(); ++i) {
    double s = 0.0;
    for (std::size_t b = 0; b < t1.bands; ++b) {
      const double d = t2.data[b * t1.pixels() + i] - t1.data[b * t1.pixels() + i];
      s += d * d;
    }
    out.data[i] = std::sqrt(s);
  }
  return out;
}

ChangeScore pca_diff(const Raster& t1, const Raster& t2, std::size_t k) {
  check_pair(t1, t2);
  const std::size_t bands = t1.bands, n = t1.pixels();
  if (k == 0) k = bands;
  if (k > bands) {
    throw ValidationError("pca: k = " + std::to_string(k) + " exceeds the band count " +
                          std::to_string(bands));
  }
  Raster diff = t1;
  for (std::size_t i = 0; i < diff.data.size(); ++i) diff.data[i] = t2.data[i] - t1.data[i];
  const std::vector<double> ones(n, 1.0);
  const auto mean = weighted_mean(diff, ones, static_cast<double>(n));
  const Matrix cov = weighted_cov(diff, mean, diff, mean, ones, static_cast<double>(n));
  for (double v : cov.data) {
    if (!std::isfinite(v)) throw NumericalError("pca: difference covariance is not finite");
  }
  const EigenSystem eig = jacobi_eigh(cov);

  ChangeScore out = score_raster(t1);
  std::vector<double> centered(bands);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t b = 0; b < bands; ++b) centered[b] = diff.data[b * n + i] - mean[b];
    double s = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      double proj = 0.0;
      for (std::size_t b = 0; b < bands; ++b) proj += eig.vectors(b, c) * centered[b];
      s += proj * proj;
    }
    out.data[i] = std::sqrt(s);
  }
  return out;
}

MADResult mad(const Raster& t1, const Raster& t2, std::span<const double> weights) {
  check_pair(t1, t2);
  const std::size_t bands = t1.bands, n = t1.pixels();
  std::vector<double> ones;
  if (weights.empty()) {
    ones.assign(n, 1.0);
    weights = ones;
  }
  if (weights.size() != n) {
    throw DimensionError("mad: " + std::to_string(weights.size()) + " weights for " +
                         std::to_string(n) + " pixels");
  }
  double total = 0.0, total_sq = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ValidationError("mad: weights must be >= 0");
    total += w;
    total_sq += w * w;
  }
  // Kish effective sample size.
  if (!(total > 0.0) || total * total / total_sq < static_cast<double>(bands + 1)) {
    throw ValidationError("mad: needs at least " + std::to_string(bands + 1) +
                          " effective samples");
  }

  const auto m1 = weighted_mean(t1, weights, total);
  const auto m2 = weighted_mean(t2, weights, total);
  const Matrix s11 = weighted_cov(t1, m1, t1, m1, weights, total);
  const Matrix s22 = weighted_cov(t2, m2, t2, m2, weights, total);
  const Matrix s12 = weighted_cov(t1, m1, t2, m2, weights, total);

  MADResult r;
  const Matrix l1 = factor(s11, "T1", r.regularized);
  const Matrix l2 = factor(s22, "T2", r.regularized);
  // K = L1^-1 S12 L2^-T; its singular values are the canonical correlations.
  const Matrix k = solve_lower(l2, solve_lower(l1, s12).transposed()).transposed();
  const Matrix kt = k.transposed();
  const EigenSystem left = jacobi_eigh(k * kt);
  const EigenSystem right = jacobi_eigh(kt * k);

  Matrix u = left.vectors;
  Matrix v(bands, bands);
  r.rho.resize(bands);
  for (std::size_t i = 0; i < bands; ++i) {
    orient(u, i);
    const double rho = std::clamp(std::sqrt(std::max(left.values[i], 0.0)), 0.0, 1.0);
    r.rho[i] = rho;
    if (rho > 1e-12) {
      for (std::size_t row = 0; row < bands; ++row) {
        double s = 0.0;
        for (std::size_t c = 0; c < bands; ++c) s += kt(row, c) * u(c, i);
        v(row, i) = s / rho;
      }
    } else {
      for (std::size_t row = 0; row < bands; ++row) v(row, i) = right.vectors(row, i);
    }
  }
  r.a = solve_lower_transposed(l1, u);
  r.b = solve_lower_transposed(l2, v);
  r.variances.resize(bands);
  for (std::size_t i = 0; i < bands; ++i) r.variances[i] = 2.0 * (1.0 - r.rho[i]);

  r.variates = Raster(t1.width, t1.height, bands);
  r.chi_square = score_raster(t1);
  for (std::size_t p = 0; p < n; ++p) {
    double z = 0.0;
    for (std::size_t i = 0; i < bands; ++i) {
      double m = 0.0;
      for (std::size_t b = 0; b < bands; ++b) {
        m += r.a(b, i) * (t1.data[b * n + p] - m1[b]) - r.b(b, i) * (t2.data[b * n + p] - m2[b]);
      }
      r.variates.data[i * n + p] = m;
      z += m * m / std::max(r.variances[i], kVarianceFloor);
    }
    if (!std::isfinite(z)) throw NumericalError("mad: chi-square score is not finite");
    r.chi_square.data[p] = z;
  }
  return r;
}

MADResult irmad(const Raster& t1, const Raster& t2, std::size_t max_iter, double tol) {
  if (max_iter < 1) throw ValidationError("irmad: max_iter must be >= 1");
  if (!(tol > 0.0)) throw ValidationError("irmad: tol must be > 0");
  MADResult r = mad(t1, t2);
  std::size_t iter = 1;
  std::vector<double> weights(t1.pixels());
  const double dof = static_cast<double>(t1.bands);
  while (iter < max_iter) {
    for (std::size_t p = 0; p < weights.size(); ++p) {
      weights[p] = 1.0 - chisq_cdf(r.chi_square.data[p], dof);
    }
    MADResult next = mad(t1, t2, weights);
    ++iter;
    double delta = 0.0;
    for (std::size_t i = 0; i < next.rho.size(); ++i) {
      delta = std::max(delta, std::abs(next.rho[i] - r.rho[i]));
    }
    next.regularized = next.regularized || r.regularized;
    r = std::move(next);
    if (delta < tol) break;
  }
  r.iterations = iter;
  return r;
}

ThresholdResult kmeans_threshold(const ChangeScore& score) {
  if (score.data.empty()) throw ValidationError("k-means threshold: empty score raster");
  const auto [lo_it, hi_it] = std::minmax_element(score.data.begin(), score.data.end());
  ThresholdResult out;
  out.low_center = *lo_it;
  out.high_center = *hi_it;
  if (!(out.low_center < out.high_center)) {
    throw ValidationError("k-means threshold: score raster is constant");
  }
  std::vector<char> high(score.data.size(), 0);
  for (;;) {
    ++out.iterations;
    bool changed = false;
    double sum_lo = 0.0, sum_hi = 0.0;
    std::size_t n_lo = 0, n_hi = 0;
    for (std::size_t i = 0; i < score.data.size(); ++i) {
      const double s = score.data[i];
      const char h = std::abs(s - out.high_center) < std::abs(s - out.low_center) ? 1 : 0;
      changed = changed || h != high[i] || out.iterations == 1;
      high[i] = h;
      if (h) {
        sum_hi += s;
        ++n_hi;
      } else {
        sum_lo += s;
        ++n_lo;
      }
    }
    if (!changed) break;
    // Both clusters stay non-empty: the extremes always sit with their seed.
    out.low_center = sum_lo / static_cast<double>(n_lo);
    out.high_center = sum_hi / static_cast<double>(n_hi);
  }
  out.threshold = 0.5 * (out.low_center + out.high_center);
  out.map = Raster(score.width, score.height, 1, 0.0, DType::u8);
  for (std::size_t i = 0; i < score.data.size(); ++i) {
    out.map.data[i] = score.data[i] > out.threshold ? 1.0 : 0.0;
  }
  return out;
}

}  // namespace recnn
