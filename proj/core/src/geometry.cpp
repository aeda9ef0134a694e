#include "twoview/geometry.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "twoview/error.hpp"

namespace twoview {

double wrap_angle(double radians) noexcept {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double wrapped = std::fmod(radians, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  // fmod of a tiny negative value can round up to exactly 2pi.
  if (wrapped >= kTwoPi) wrapped = 0.0;
  return wrapped;
}

void validate(const Correspondence& c) {
  if (!(c.q1 > 0.0) || !(c.q2 > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "feature scales must be positive");
  }
  if (!c.p1.allFinite() || !c.p2.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "non-finite point coordinates");
  }
  if (c.prior && !(*c.prior >= 0.0 && *c.prior <= 1.0)) {
    throw Error(ErrorCode::kInvalidInput, "prior must lie in [0, 1]");
  }
  if (c.snn_ratio && !(*c.snn_ratio > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "SNN ratio must be positive");
  }
}

Correspondence make_correspondence(const Vec2& p1, const Vec2& p2,
                                   double alpha1, double q1, double alpha2,
                                   double q2, std::optional<double> snn_ratio,
                                   std::optional<double> prior) {
  Correspondence c;
  c.p1 = p1;
  c.p2 = p2;
  c.alpha1 = wrap_angle(alpha1);
  c.alpha2 = wrap_angle(alpha2);
  c.q1 = q1;
  c.q2 = q2;
  c.snn_ratio = snn_ratio;
  c.prior = prior;
  validate(c);
  return c;
}

CameraIntrinsics::CameraIntrinsics(const Mat3& k) : k_(k) {
  const bool upper = k(1, 0) == 0.0 && k(2, 0) == 0.0 && k(2, 1) == 0.0;
  if (!upper || k(2, 2) != 1.0) {
    throw Error(ErrorCode::kInvalidInput,
                "intrinsics must be upper triangular with K(2,2) = 1");
  }
  if (!(k(0, 0) > 0.0) || !(k(1, 1) > 0.0) || !k.allFinite()) {
    throw Error(ErrorCode::kInvalidInput, "focal lengths must be positive");
  }
  k_inv_ = k.inverse();
}

CameraIntrinsics CameraIntrinsics::from_pinhole(double fx, double fy,
                                                double cx, double cy) {
  Mat3 k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return CameraIntrinsics(k);
}

Vec2 CameraIntrinsics::normalize(const Vec2& pixel) const {
  return (k_inv_ * pixel.homogeneous()).hnormalized();
}

Vec2 CameraIntrinsics::denormalize(const Vec2& normalized) const {
  return (k_ * normalized.homogeneous()).hnormalized();
}

ModelMatrix ModelMatrix::normalized(const Mat3& m, ModelKind kind) {
  const double norm = m.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error(ErrorCode::kInvalidInput, "model matrix has zero norm");
  }
  return ModelMatrix(m / norm, kind);
}

bool ModelMatrix::satisfies_invariants() const {
  const double norm = m_.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) return false;
  const Mat3 unit = m_ / norm;
  if (std::abs(unit.determinant()) >= 1e-8) return false;
  if (kind_ == ModelKind::kEssential) {
    const Vec3 s = Eigen::JacobiSVD<Mat3>(unit).singularValues();
    if (!(s(0) > 0.0)) return false;
    if (std::abs(1.0 - s(1) / s(0)) > 1e-6) return false;
  }
  return true;
}

double model_distance(const Mat3& a, const Mat3& b) {
  const Mat3 an = a / a.norm();
  const Mat3 bn = b / b.norm();
  return std::min((an - bn).norm(), (an + bn).norm());
}

bool Pose::is_valid() const {
  if (!R.allFinite() || !t.allFinite()) return false;
  if ((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9) {
    return false;
  }
  if (R.determinant() <= 0.0) return false;
  return std::abs(t.norm() - 1.0) <= 1e-9;
}

Pose make_pose(const Mat3& R, const Vec3& t) {
  const double norm = t.norm();
  if (!(norm > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "translation must be nonzero");
  }
  Pose pose{R, t / norm};
  if (!pose.is_valid()) {
    throw Error(ErrorCode::kInvalidInput, "R is not a rotation matrix");
  }
  return pose;
}

Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

Mat3 essential_from_pose(const Pose& pose) {
  const Mat3 e = skew(pose.t) * pose.R;
  return e / e.norm();
}

Mat3 fundamental_from_essential(const Mat3& e, const CameraIntrinsics& k1,
                                const CameraIntrinsics& k2) {
  const Mat3 f = k2.inverse().transpose() * e * k1.inverse();
  return f / f.norm();
}

Mat3 essential_from_fundamental(const Mat3& f, const CameraIntrinsics& k1,
                                const CameraIntrinsics& k2) {
  const Mat3 e = k2.matrix().transpose() * f * k1.matrix();
  return e / e.norm();
}

Correspondence normalize_correspondence(const Correspondence& c,
                                        const CameraIntrinsics& k1,
                                        const CameraIntrinsics& k2) {
  Correspondence out = c;
  out.p1 = k1.normalize(c.p1);
  out.p2 = k2.normalize(c.p2);
  out.q1 = c.q1 / k1.focal();
  out.q2 = c.q2 / k2.focal();
  return out;
}

Correspondence denormalize_correspondence(const Correspondence& c,
                                          const CameraIntrinsics& k1,
                                          const CameraIntrinsics& k2) {
  Correspondence out = c;
  out.p1 = k1.denormalize(c.p1);
  out.p2 = k2.denormalize(c.p2);
  out.q1 = c.q1 * k1.focal();
  out.q2 = c.q2 * k2.focal();
  return out;
}

EpipolarNormals epipolar_line_normals(const Mat3& f, const Vec2& p1,
                                      const Vec2& p2) {
  EpipolarNormals normals;
  normals.n1 = (f.transpose() * p2.homogeneous()).head<2>();
  normals.n2 = (f * p1.homogeneous()).head<2>();
  if (normals.n1.norm() < kDegenerateNormal ||
      normals.n2.norm() < kDegenerateNormal) {
    throw Error(ErrorCode::kDegenerateGeometry,
                "point lies at or near an epipole");
  }
  return normals;
}

namespace {

struct ResidualParts {
  double e;
  double n1_sq;
  double n2_sq;
};

inline ResidualParts residual_parts(const Mat3& f, const Vec2& p1,
                                    const Vec2& p2) noexcept {
  const Vec3 fp1 = f * p1.homogeneous();
  const Vec3 ftp2 = f.transpose() * p2.homogeneous();
  return {p2.homogeneous().dot(fp1), ftp2.head<2>().squaredNorm(),
          fp1.head<2>().squaredNorm()};
}

constexpr double kDegenerateNormalSq = kDegenerateNormal * kDegenerateNormal;

}  // namespace

double squared_residual(ResidualKind kind, const Mat3& f, const Vec2& p1,
                        const Vec2& p2) noexcept {
  const ResidualParts r = residual_parts(f, p1, p2);
  const double e2 = r.e * r.e;
  if (e2 == 0.0) return 0.0;
  if (kind == ResidualKind::kSampson) {
    const double denom = r.n1_sq + r.n2_sq;
    if (denom < kDegenerateNormalSq) {
      return std::numeric_limits<double>::infinity();
    }
    return e2 / denom;
  }
  if (r.n1_sq < kDegenerateNormalSq || r.n2_sq < kDegenerateNormalSq) {
    return std::numeric_limits<double>::infinity();
  }
  return 0.5 * e2 * (1.0 / r.n1_sq + 1.0 / r.n2_sq);
}

double symmetric_epipolar_distance(const Mat3& f, const Vec2& p1,
                                   const Vec2& p2) {
  const ResidualParts r = residual_parts(f, p1, p2);
  if (r.n1_sq < kDegenerateNormalSq && r.n2_sq < kDegenerateNormalSq) {
    throw Error(ErrorCode::kDegenerateGeometry,
                "both epipolar line normals vanish");
  }
  return std::sqrt(squared_residual(ResidualKind::kSymmetricEpipolar, f, p1, p2));
}

double sampson_distance(const Mat3& f, const Vec2& p1, const Vec2& p2) {
  const ResidualParts r = residual_parts(f, p1, p2);
  if (r.n1_sq < kDegenerateNormalSq && r.n2_sq < kDegenerateNormalSq) {
    throw Error(ErrorCode::kDegenerateGeometry,
                "both epipolar line normals vanish");
  }
  return std::sqrt(squared_residual(ResidualKind::kSampson, f, p1, p2));
}

namespace {

// Depths (d1, d2) with d2 x2 = R d1 x1 + t, least squares.
Eigen::Vector2d depths(const Pose& pose, const Vec2& x1, const Vec2& x2) {
  Eigen::Matrix<double, 3, 2> a;
  a.col(0) = pose.R * x1.homogeneous();
  a.col(1) = -x2.homogeneous();
  const Eigen::Matrix2d ata = a.transpose() * a;
  const Eigen::Vector2d atb = -(a.transpose() * pose.t);
  const double det = ata.determinant();
  if (std::abs(det) < 1e-300) return Eigen::Vector2d::Zero();
  return ata.inverse() * atb;
}

}  // namespace

Vec3 triangulate(const Pose& pose, const Vec2& x1, const Vec2& x2) {
  return depths(pose, x1, x2).x() * x1.homogeneous();
}

Pose decompose_essential(const ModelMatrix& e,
                         std::span<const Correspondence> correspondences) {
  if (e.kind() != ModelKind::kEssential) {
    throw Error(ErrorCode::kInvalidInput, "decomposition needs an essential matrix");
  }
  if (correspondences.empty()) {
    throw Error(ErrorCode::kDegenerateGeometry,
                "no correspondences for cheirality test");
  }
  Eigen::JacobiSVD<Mat3> svd(e.matrix(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  Mat3 v = svd.matrixV();
  if (u.determinant() < 0.0) u = -u;
  if (v.determinant() < 0.0) v = -v;
  Mat3 w;
  w << 0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;

  const Mat3 ra = u * w * v.transpose();
  const Mat3 rb = u * w.transpose() * v.transpose();
  const Vec3 t = u.col(2).normalized();
  const std::array<Pose, 4> candidates = {
      Pose{ra, t}, Pose{ra, -t}, Pose{rb, t}, Pose{rb, -t}};

  std::size_t best_count = 0;
  std::size_t best = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    std::size_t count = 0;
    for (const Correspondence& c : correspondences) {
      const Eigen::Vector2d d = depths(candidates[i], c.p1, c.p2);
      if (d.x() > 0.0 && d.y() > 0.0) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best = i;
    }
  }
  if (best_count == 0) {
    throw Error(ErrorCode::kDegenerateGeometry,
                "no pose candidate places points in front of both cameras");
  }
  return candidates[best];
}

namespace {

constexpr double kDegPerRad = 180.0 / std::numbers::pi;

}  // namespace

// Same angle as acos((tr(R_est R_gt^T) - 1) / 2), but computed through atan2
// so small errors are not lost to the flat top of acos.
double rotation_error_deg(const Mat3& est, const Mat3& gt) {
  const Mat3 d = est * gt.transpose();
  const Vec3 axis(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
  return std::atan2(0.5 * axis.norm(), 0.5 * (d.trace() - 1.0)) * kDegPerRad;
}

double translation_error_deg(const Vec3& est, const Vec3& gt,
                             const PoseErrorOptions& options) {
  const double angle = std::atan2(gt.cross(est).norm(), gt.dot(est)) * kDegPerRad;
  return options.fold_translation_sign ? std::min(angle, 180.0 - angle) : angle;
}

double pose_error_deg(const Pose& est, const Pose& gt,
                      const PoseErrorOptions& options) {
  return std::max(rotation_error_deg(est.R, gt.R),
                  translation_error_deg(est.t, gt.t, options));
}

}  // namespace twoview
