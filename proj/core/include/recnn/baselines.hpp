#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "recnn/linalg.hpp"
#include "recnn/raster.hpp"

namespace recnn {

/// Single-band raster of non-negative, finite change magnitudes.
using ChangeScore = Raster;

/// Per-pixel Euclidean norm of T2 - T1.
ChangeScore cva(const Raster& t1, const Raster& t2);

/// Norm of each centered difference pixel projected onto the top-k
/// principal components of the difference image. k = 0 means all bands.
ChangeScore pca_diff(const Raster& t1, const Raster& t2, std::size_t k = 0);

struct MADResult {
  std::vector<double> rho;        // descending, in [0, 1]
  Matrix a;                       // column i: T1 transform for variate i
  Matrix b;                       // column i: T2 transform
  std::vector<double> variances;  // 2 (1 - rho_i)
  /// Per-pixel MAD variates, BSQ with one band per variate.
  Raster variates;
  ChangeScore chi_square;
  std::size_t iterations = 1;
  bool regularized = false;
};

/// Weighted canonical correlation of the two band sets through Cholesky
/// whitening. An empty `weights` span means every pixel has weight 1.
MADResult mad(const Raster& t1, const Raster& t2, std::span<const double> weights = {});

/// Reweights pixels by their no-change probability until the largest
/// change in any correlation falls below `tol`.
MADResult irmad(const Raster& t1, const Raster& t2, std::size_t max_iter = 30, double tol = 1e-6);

struct ThresholdResult {
  double threshold = 0.0;
  double low_center = 0.0;
  double high_center = 0.0;
  std::size_t iterations = 0;
  Raster map;  // u8, 1 where score > threshold
};

/// 1-D two-means seeded at the minimum and maximum score.
ThresholdResult kmeans_threshold(const ChangeScore& score);

}  // namespace recnn
