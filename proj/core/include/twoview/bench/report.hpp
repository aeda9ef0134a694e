#pragma once

#include <optional>
#include <string>
#include <vector>

#include "twoview/bench/metrics.hpp"
#include "twoview/bench/scene.hpp"

namespace twoview::bench {

struct PairRecord {
  std::string id;
  bool ok = false;  // estimation succeeded
  std::string error;
  /// Row-major estimated model (fundamental in pixels or essential).
  std::vector<double> model;
  std::optional<double> pose_error_deg;  // 180 for failed estimations
  std::optional<double> f1;
  std::optional<double> median_epi_err;
  std::size_t inliers = 0;
  int iterations = 0;
  double quality = 0.0;
  std::optional<double> estimation_ms;
  std::optional<double> total_ms;  // includes prior computation and evaluation

  bool operator==(const PairRecord&) const = default;
};

struct MethodReport {
  std::string sampler;
  std::string problem;  // "f" or "e"
  MetricSet metrics;
  std::size_t evaluated = 0;
  std::size_t failed = 0;  // estimation failures, counted as 180 degrees
  double mean_inliers = 0.0;
  std::optional<double> median_pose_error_deg;
  std::vector<PairRecord> pairs;  // sorted by id

  bool operator==(const MethodReport&) const = default;
};

struct BenchmarkReport {
  std::vector<MethodReport> methods;
  /// Pairs that could not be loaded; not part of any metric.
  std::vector<LoadFailure> dropped;

  bool operator==(const BenchmarkReport&) const = default;
};

inline bool operator==(const LoadFailure& a, const LoadFailure& b) {
  return a.id == b.id && a.message == b.message;
}

/// Pretty-printed JSON; doubles are written with round-trip precision.
std::string to_json(const BenchmarkReport& report);
/// Throws Error(kDataError) on malformed input.
BenchmarkReport report_from_json(const std::string& text);

std::string to_json(const PairRecord& record);

}  // namespace twoview::bench
