#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "twoview/bench/report.hpp"
#include "twoview/bench/scene.hpp"
#include "twoview/estimator.hpp"

namespace twoview::bench {

enum class PriorSource { kFile, kSnnRank, kUniform };

/// "file" | "snn-rank" | "uniform"; throws Error(kInvalidInput).
PriorSource parse_prior_source(std::string_view name);

struct BenchmarkOptions {
  /// Shared settings; the sampler is taken from `samplers`.
  EstimatorConfig estimator;
  std::vector<SamplerKind> samplers{SamplerKind::kUniform, SamplerKind::kAr};
  PriorSource prior = PriorSource::kSnnRank;
  /// SNN ratio test applied before estimation; nullopt disables it.
  std::optional<double> snn_filter = 0.8;
  /// 0 selects std::thread::hardware_concurrency().
  std::size_t workers = 0;
  /// Timings make reports non-reproducible; disable for byte comparisons.
  bool include_timing = true;
  double gt_threshold = 1.0;   // px
  double est_threshold = 1.0;  // px
  std::vector<int> auc_thresholds{5, 10, 20};
  PoseErrorOptions pose_error;
};

struct PairEvaluation {
  PairRecord record;
  std::optional<EstimationReport> estimation;
  /// Indices of the estimator input within the scene's correspondences.
  std::vector<std::size_t> kept;
};

/// Prefilter, prior computation, estimation and evaluation of one pair.
/// Essential estimation runs on normalized coordinates with the pixel
/// sigma_max divided by the mean focal length. Errors are recorded in the
/// result, never thrown.
PairEvaluation evaluate_pair(const ScenePair& pair, SamplerKind sampler,
                             const BenchmarkOptions& options);

/// Evaluates every sampler on every pair with a bounded worker pool. Output
/// order is deterministic (methods as configured, pairs sorted by id).
BenchmarkReport run_benchmark(const Dataset& dataset,
                              const BenchmarkOptions& options);

struct VarianceFit {
  double variance = 0.0;
  /// (variance, mean inlier count at the iteration cap) per grid value.
  std::vector<std::pair<double, double>> scores;
};

/// Picks the AR prior variance maximizing the mean inlier count reached
/// within `iteration_cap` fixed iterations; ties keep the smaller variance.
/// Throws Error(kInvalidInput) for an empty grid or dataset.
VarianceFit calibrate_prior_variance(const Dataset& dataset,
                                     const BenchmarkOptions& options,
                                     std::span<const double> grid,
                                     int iteration_cap);

}  // namespace twoview::bench
