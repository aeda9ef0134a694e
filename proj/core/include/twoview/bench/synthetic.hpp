#pragma once

#include <cstdint>

#include "twoview/bench/scene.hpp"

namespace twoview::bench {

struct SyntheticParams {
  std::size_t n = 500;
  double inlier_ratio = 0.5;
  double noise_px = 1.0;
  /// Baseline length relative to the distance of the point cloud; the
  /// rotation angle is drawn up to 15 degrees times this factor.
  double motion = 1.0;
  std::uint64_t seed = 0;
  double focal = 800.0;
  int width = 1024;
  int height = 768;
};

/// Random points in a box in front of two pinhole cameras. Inliers are
/// projected with Gaussian pixel noise, outliers are uniform in both images.
/// SIFT frames of inliers follow the first-order approximation of a random
/// local plane-induced homography; SNN ratios are U(0.1, 0.7) for inliers and
/// U(0.6, 1.0) for outliers. The number of inliers is round(n * ratio).
/// Throws Error(kInvalidInput) unless n >= 8 and 0 < inlier_ratio <= 1.
ScenePair generate_synthetic(const SyntheticParams& params);

}  // namespace twoview::bench
