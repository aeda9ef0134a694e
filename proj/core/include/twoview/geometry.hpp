#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <optional>
#include <span>
#include <vector>

namespace twoview {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Norm below which an epipolar line normal is treated as vanishing.
inline constexpr double kDegenerateNormal = 1e-12;

/// A tentative point match with the SIFT frame (orientation, scale) measured
/// in each image.
struct Correspondence {
  Vec2 p1 = Vec2::Zero();
  Vec2 p2 = Vec2::Zero();
  double alpha1 = 0.0;  // radians, [0, 2pi)
  double alpha2 = 0.0;
  double q1 = 1.0;      // feature scale, > 0
  double q2 = 1.0;
  std::optional<double> snn_ratio;
  std::optional<double> prior;
};

/// Wraps an angle into [0, 2pi).
double wrap_angle(double radians) noexcept;

/// Builds a correspondence, wrapping the angles and checking the scale and
/// prior invariants. Throws Error(kInvalidInput).
Correspondence make_correspondence(const Vec2& p1, const Vec2& p2,
                                   double alpha1, double q1, double alpha2,
                                   double q2,
                                   std::optional<double> snn_ratio = {},
                                   std::optional<double> prior = {});

void validate(const Correspondence& c);

class CameraIntrinsics {
 public:
  /// Throws Error(kInvalidInput) unless k is upper triangular with bottom
  /// row (0, 0, 1) and positive focal entries.
  explicit CameraIntrinsics(const Mat3& k);

  static CameraIntrinsics from_pinhole(double fx, double fy, double cx,
                                       double cy);
  static CameraIntrinsics identity() { return CameraIntrinsics(Mat3::Identity()); }

  const Mat3& matrix() const noexcept { return k_; }
  const Mat3& inverse() const noexcept { return k_inv_; }
  /// Mean of fx and fy.
  double focal() const noexcept { return 0.5 * (k_(0, 0) + k_(1, 1)); }

  Vec2 normalize(const Vec2& pixel) const;
  Vec2 denormalize(const Vec2& normalized) const;

 private:
  Mat3 k_;
  Mat3 k_inv_;
};

enum class ModelKind { kFundamental, kEssential };

/// A 3x3 two-view relation, fundamental or essential.
class ModelMatrix {
 public:
  ModelMatrix() = default;
  ModelMatrix(const Mat3& m, ModelKind kind) : m_(m), kind_(kind) {}

  /// Scales m to unit Frobenius norm.
  static ModelMatrix normalized(const Mat3& m, ModelKind kind);

  const Mat3& matrix() const noexcept { return m_; }
  ModelKind kind() const noexcept { return kind_; }

  /// Rank-2 check (|det| < 1e-8 after Frobenius normalization) and, for
  /// essential matrices, equal nonzero singular values (ratio within 1e-6).
  bool satisfies_invariants() const;

  bool operator==(const ModelMatrix&) const = default;

 private:
  Mat3 m_ = Mat3::Zero();
  ModelKind kind_ = ModelKind::kFundamental;
};

/// Distance between two models up to scale and sign: both are Frobenius
/// normalized and the smaller of |a - b| and |a + b| is returned.
double model_distance(const Mat3& a, const Mat3& b);

/// Relative pose: x2 ~ R x1 + t.
struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::UnitX();

  /// Orthonormality to 1e-9, det R = +1 and |t| = 1.
  bool is_valid() const;
};

Pose make_pose(const Mat3& R, const Vec3& t);

Mat3 skew(const Vec3& v);
/// E = [t]x R, Frobenius normalized.
Mat3 essential_from_pose(const Pose& pose);
/// F = K2^-T E K1^-1, Frobenius normalized.
Mat3 fundamental_from_essential(const Mat3& e, const CameraIntrinsics& k1,
                                const CameraIntrinsics& k2);
/// E = K2^T F K1, Frobenius normalized.
Mat3 essential_from_fundamental(const Mat3& f, const CameraIntrinsics& k1,
                                const CameraIntrinsics& k2);

/// Maps points through K^-1 and the feature scales into normalized units.
/// The orientation is left unchanged; the scale ratio q2/q1 is multiplied by
/// f1/f2.
Correspondence normalize_correspondence(const Correspondence& c,
                                        const CameraIntrinsics& k1,
                                        const CameraIntrinsics& k2);
Correspondence denormalize_correspondence(const Correspondence& c,
                                          const CameraIntrinsics& k1,
                                          const CameraIntrinsics& k2);

struct EpipolarNormals {
  Vec2 n1;  // (F^T p2)[0:2], normal of the epipolar line in image 1
  Vec2 n2;  // (F p1)[0:2], normal of the epipolar line in image 2
};

/// Throws Error(kDegenerateGeometry) if either normal vanishes.
EpipolarNormals epipolar_line_normals(const Mat3& f, const Vec2& p1,
                                      const Vec2& p2);
inline EpipolarNormals epipolar_line_normals(const Mat3& f,
                                             const Correspondence& c) {
  return epipolar_line_normals(f, c.p1, c.p2);
}

/// p2^T F p1
inline double algebraic_error(const Mat3& f, const Vec2& p1, const Vec2& p2) {
  return p2.homogeneous().dot(f * p1.homogeneous());
}

/// sqrt( e^2 / 2 * (1/|n1|^2 + 1/|n2|^2) ) with e = p2^T F p1: the root mean
/// square of the point-to-epipolar-line distances in the two images.
/// Throws Error(kDegenerateGeometry) if both normals vanish.
double symmetric_epipolar_distance(const Mat3& f, const Vec2& p1,
                                   const Vec2& p2);
/// sqrt( e^2 / (|n1|^2 + |n2|^2) ).
double sampson_distance(const Mat3& f, const Vec2& p1, const Vec2& p2);

inline double symmetric_epipolar_distance(const Mat3& f,
                                          const Correspondence& c) {
  return symmetric_epipolar_distance(f, c.p1, c.p2);
}
inline double sampson_distance(const Mat3& f, const Correspondence& c) {
  return sampson_distance(f, c.p1, c.p2);
}

enum class ResidualKind { kSymmetricEpipolar, kSampson };

/// Squared residual without exception paths. Returns +inf when the
/// residual is undefined (both normals vanish while e != 0).
double squared_residual(ResidualKind kind, const Mat3& f, const Vec2& p1,
                        const Vec2& p2) noexcept;

inline double residual(ResidualKind kind, const Mat3& f,
                       const Correspondence& c) {
  return kind == ResidualKind::kSampson ? sampson_distance(f, c)
                                        : symmetric_epipolar_distance(f, c);
}

/// Linear triangulation of a normalized correspondence with P1 = [I|0],
/// P2 = [R|t]. Returns the point in the first camera frame.
Vec3 triangulate(const Pose& pose, const Vec2& x1, const Vec2& x2);

/// Picks the cheirality-consistent pose among the four decompositions of E.
/// The correspondences must be in normalized coordinates.
/// Throws Error(kInvalidInput) for a non-essential model and
/// Error(kDegenerateGeometry) when no candidate has a point in front of both
/// cameras.
Pose decompose_essential(const ModelMatrix& e,
                         std::span<const Correspondence> correspondences);

struct PoseErrorOptions {
  bool fold_translation_sign = false;
};

double rotation_error_deg(const Mat3& est, const Mat3& gt);
double translation_error_deg(const Vec3& est, const Vec3& gt,
                             const PoseErrorOptions& options = {});
/// max(rotation error, translation error) in degrees.
double pose_error_deg(const Pose& est, const Pose& gt,
                      const PoseErrorOptions& options = {});

}  // namespace twoview
