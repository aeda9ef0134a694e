#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "twoview/geometry.hpp"

namespace twoview::bench {

/// One image pair with its tentative matches and whatever ground truth is
/// known. Correspondences are in pixel coordinates.
struct ScenePair {
  std::string id;
  std::vector<Correspondence> correspondences;
  std::optional<CameraIntrinsics> k1;
  std::optional<CameraIntrinsics> k2;
  std::optional<Pose> gt_pose;
  std::optional<ModelMatrix> gt_model;  // fundamental, pixel coordinates
  /// Inlier flags, known for synthetic scenes only.
  std::vector<bool> labels;

  bool calibrated() const noexcept { return k1.has_value() && k2.has_value(); }
  /// gt_model, or K2^-T [t]x R K1^-1 from the pose and intrinsics.
  std::optional<Mat3> gt_fundamental() const;
};

/// Parses `x1 y1 x2 y2 alpha1 q1 alpha2 q2 snn [prior]` lines; `#` starts a
/// comment. Throws Error(kDataError) naming `source` and the line number.
std::vector<Correspondence> parse_correspondences(std::istream& in,
                                                  const std::string& source);
void write_correspondences(std::ostream& out,
                           const std::vector<Correspondence>& correspondences);

struct Calibration {
  CameraIntrinsics k1;
  CameraIntrinsics k2;
  Pose pose;
};

/// 30 numbers: K1, K2, R (row-major), t. Throws Error(kDataError).
Calibration parse_calibration(std::istream& in, const std::string& source);
void write_calibration(std::ostream& out, const Calibration& calibration);

/// Loads `<dir>/<id>.corr` and, if present, `<dir>/<id>.cal`.
ScenePair load_scene(const std::filesystem::path& corr_file);
/// Writes `<dir>/<id>.corr` and, for calibrated scenes with a pose, `<id>.cal`.
void save_scene(const std::filesystem::path& dir, const ScenePair& scene);

struct LoadFailure {
  std::string id;
  std::string message;
};

struct Dataset {
  std::vector<ScenePair> pairs;  // sorted by id
  std::vector<LoadFailure> failures;
};

/// Loads every `*.corr` file of a directory. Unreadable or malformed pairs
/// are recorded in `failures`. Throws Error(kDataError) if `dir` is not a
/// directory.
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace twoview::bench
