#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "twoview/geometry.hpp"
#include "twoview/samplers.hpp"
#include "twoview/sigma_consensus.hpp"

namespace twoview {

struct EstimatorConfig {
  ModelKind problem = ModelKind::kFundamental;
  SamplerKind sampler = SamplerKind::kAr;
  /// Maximum noise scale in pixels.
  double sigma_max = 0.75;
  /// Residuals are divided by this before thresholding or weighting; set it
  /// to the mean focal length when points are in normalized coordinates.
  double residual_scale = 1.0;
  double confidence = 0.99;
  int max_iterations = 1000;
  int min_iterations = 50;
  /// Run exactly max_iterations, ignoring the confidence bound.
  bool fixed_iterations = false;
  std::uint64_t seed = 0;
  /// Default: symmetric epipolar distance for F, Sampson distance for E.
  std::optional<ResidualKind> residual;
  int irls_iterations = 5;
  /// 7 (seven-point solver) or 8 (unit-weight eight-point) for F.
  std::size_t fundamental_sample_size = 7;
  int nu = 4;
  double k = 3.64;
  SamplerSettings sampler_settings;
  /// Reject essential hypotheses that place no sample point in front of
  /// both cameras.
  bool cheirality_check = false;
  bool record_trace = false;

  ResidualKind residual_kind() const noexcept {
    return residual.value_or(problem == ModelKind::kEssential
                                 ? ResidualKind::kSampson
                                 : ResidualKind::kSymmetricEpipolar);
  }
  /// Throws Error(kInvalidInput) on inconsistent settings.
  void validate() const;
};

struct EstimationTrace {
  /// Best quality after each iteration (non-decreasing).
  std::vector<double> best_quality;
  /// Inlier count of the best model after each iteration.
  std::vector<std::size_t> inlier_count;
};

struct EstimationReport {
  ModelMatrix model;
  /// Indices with residual below k * sigma_max.
  std::vector<std::size_t> inliers;
  double quality = 0.0;
  int iterations = 0;
  std::size_t hypotheses = 0;
  std::size_t degenerate_samples = 0;
  std::size_t accepted_polishes = 0;
  std::chrono::duration<double, std::milli> elapsed{0.0};
  EstimationTrace trace;
};

/// Called after every drawn sample; used for instrumentation.
using SampleObserver = std::function<void(int iteration, std::span<const std::size_t>)>;

/// Robust estimation: sample -> minimal solve -> marginalized quality ->
/// IRLS polish of each new best -> adaptive termination.
/// `priors` must hold one value per point unless the sampler is uniform.
/// Throws Error(kInsufficientPoints) when fewer points than the sample size
/// are given and Error(kEstimationFailed) when no hypothesis has support.
EstimationReport estimate(std::span<const Correspondence> points,
                          std::span<const double> priors,
                          const EstimatorConfig& config,
                          const SampleObserver& observer = {});

/// ceil(log(1 - confidence) / log(1 - ratio^m)) clamped to
/// [min_iterations, max_iterations].
int termination_iterations(double inlier_ratio, std::size_t sample_size,
                           double confidence, int min_iterations,
                           int max_iterations);

struct PrefilterResult {
  std::vector<Correspondence> kept;
  std::vector<std::size_t> indices;  // into the input
  /// Correspondences passed through because they carry no SNN ratio.
  std::size_t missing_ratio = 0;
};

/// Keeps correspondences with snn_ratio <= threshold, preserving order.
PrefilterResult snn_prefilter(std::span<const Correspondence> correspondences,
                              double threshold);

}  // namespace twoview
