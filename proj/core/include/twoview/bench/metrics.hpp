#pragma once

#include <map>
#include <optional>
#include <span>
#include <vector>

#include "twoview/geometry.hpp"

namespace twoview::bench {

/// Normalized area under the recall curve of pose errors (degrees) up to
/// `threshold_deg`, integrated exactly over the step CDF. Failed estimates
/// should be encoded as 180 or +inf.
/// Throws Error(kUndefinedMetric) for an empty list and Error(kInvalidInput)
/// for negative or NaN errors or a non-positive threshold.
double auc_pose(std::span<const double> errors, double threshold_deg);

/// Ground-truth inliers have symmetric epipolar distance below gt_threshold
/// under `gt`; predicted inliers below est_threshold under `est`.
/// F1 = 2PR / (P + R), 0 when P + R = 0.
/// Throws Error(kUndefinedMetric) when there are no ground-truth inliers.
double f1_score(const Mat3& est, const Mat3& gt,
                std::span<const Correspondence> correspondences,
                double gt_threshold = 1.0, double est_threshold = 1.0);

/// Median over ground-truth inliers of the symmetric epipolar distance under
/// `est`. Throws Error(kUndefinedMetric) when there are no ground-truth inliers.
double median_epipolar_error(const Mat3& est, const Mat3& gt,
                             std::span<const Correspondence> correspondences,
                             double gt_threshold = 1.0);

/// Middle element, or the mean of the two middle elements for even counts.
/// Throws Error(kUndefinedMetric) when empty.
double median(std::vector<double> values);

struct MetricSet {
  std::map<int, double> auc_at;  // threshold in degrees -> AUC
  std::optional<double> f1;
  std::optional<double> median_epi_err;  // pixels
  std::optional<double> mean_runtime_ms;

  bool operator==(const MetricSet&) const = default;
};

}  // namespace twoview::bench
