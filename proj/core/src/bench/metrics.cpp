#include "twoview/bench/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "twoview/error.hpp"

namespace twoview::bench {

double auc_pose(std::span<const double> errors, double threshold_deg) {
  if (errors.empty()) throw Error(ErrorCode::kUndefinedMetric, "no pose errors");
  if (!(threshold_deg > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "AUC threshold must be positive");
  }
  // recall(e) = #{e_i <= e} / n, so the integral over [0, theta] is
  // sum_i max(0, theta - e_i) / n.
  double area = 0.0;
  for (double e : errors) {
    if (!(e >= 0.0)) throw Error(ErrorCode::kInvalidInput, "pose errors must be >= 0");
    if (e < threshold_deg) area += threshold_deg - e;
  }
  return area / (threshold_deg * static_cast<double>(errors.size()));
}

namespace {

double distance_or_inf(const Mat3& f, const Correspondence& c) {
  return std::sqrt(squared_residual(ResidualKind::kSymmetricEpipolar, f, c.p1, c.p2));
}

}  // namespace

double f1_score(const Mat3& est, const Mat3& gt,
                std::span<const Correspondence> correspondences,
                double gt_threshold, double est_threshold) {
  std::size_t tp = 0;
  std::size_t predicted = 0;
  std::size_t actual = 0;
  for (const Correspondence& c : correspondences) {
    const bool is_gt = distance_or_inf(gt, c) < gt_threshold;
    const bool is_pred = distance_or_inf(est, c) < est_threshold;
    actual += is_gt;
    predicted += is_pred;
    tp += is_gt && is_pred;
  }
  if (actual == 0) throw Error(ErrorCode::kUndefinedMetric, "no ground-truth inliers");
  const double recall = static_cast<double>(tp) / static_cast<double>(actual);
  const double precision =
      predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::kUndefinedMetric, "median of empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

double median_epipolar_error(const Mat3& est, const Mat3& gt,
                             std::span<const Correspondence> correspondences,
                             double gt_threshold) {
  std::vector<double> errors;
  for (const Correspondence& c : correspondences) {
    if (distance_or_inf(gt, c) < gt_threshold) errors.push_back(distance_or_inf(est, c));
  }
  if (errors.empty()) throw Error(ErrorCode::kUndefinedMetric, "no ground-truth inliers");
  return median(std::move(errors));
}

}  // namespace twoview::bench
