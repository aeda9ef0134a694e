#include "twoview/affine_epipolar.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "twoview/error.hpp"

namespace twoview {

AffineApprox affinity_from_sift(const Correspondence& c) {
  if (!(c.q1 > 0.0) || !(c.q2 > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "SIFT scales must be positive");
  }
  const double alpha = c.alpha2 - c.alpha1;
  const double s = c.q2 / c.q1;
  const double cs = std::cos(alpha);
  const double sn = std::sin(alpha);
  AffineApprox out;
  out.a << s * cs, -s * sn, s * sn, s * cs;
  out.alpha = wrap_angle(alpha);
  out.scale = s;
  return out;
}

AffineApprox affinity_from_matrix(const Mat2& a) {
  const double det = a.determinant();
  if (!(det > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "affinity must preserve orientation");
  }
  AffineApprox out;
  out.a = a;
  out.alpha = wrap_angle(std::atan2(a(1, 0) - a(0, 1), a(0, 0) + a(1, 1)));
  out.scale = std::sqrt(det);
  return out;
}

Mat2 homography_jacobian(const Mat3& h, const Vec2& p) {
  const Vec3 q = h * p.homogeneous();
  const double w = q.z();
  Mat2 j;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      j(r, c) = (h(r, c) * w - q(r) * h(2, c)) / (w * w);
    }
  }
  return j;
}

double orientation_error(const AffineApprox& a, const Mat3& f,
                         const Correspondence& c) {
  const double det = a.a.determinant();
  if (std::abs(det) < 1e-300 || !std::isfinite(det)) {
    throw Error(ErrorCode::kDegenerateGeometry, "singular affinity");
  }
  const EpipolarNormals n = epipolar_line_normals(f, c);
  const Vec2 mapped = a.a.inverse().transpose() * n.n1;
  const double denom = mapped.norm() * n.n2.norm();
  if (!(denom > 0.0)) {
    throw Error(ErrorCode::kDegenerateGeometry, "vanishing mapped normal");
  }
  return std::acos(std::clamp(mapped.dot(n.n2) / denom, -1.0, 1.0));
}

double scale_error(const AffineApprox& a, const Mat3& f,
                   const Correspondence& c) {
  const double det = a.a.determinant();
  if (!(det > 0.0)) {
    throw Error(ErrorCode::kDegenerateGeometry, "affinity with det <= 0");
  }
  const double n1 = (f.transpose() * c.p2.homogeneous()).head<2>().norm();
  const double n2 = (f * c.p1.homogeneous()).head<2>().norm();
  if (n1 < kDegenerateNormal) {
    throw Error(ErrorCode::kDegenerateGeometry, "vanishing normal in image 1");
  }
  return std::sqrt(det) - n2 / n1;
}

AffineLosses affine_losses(const AffineApprox& a, const ModelMatrix& est,
                           const ModelMatrix& gt, const Correspondence& c) {
  if (est.kind() != gt.kind()) {
    throw Error(ErrorCode::kInvalidInput, "models must be of the same kind");
  }
  AffineLosses losses;
  losses.orientation = std::abs(orientation_error(a, est.matrix(), c) -
                                orientation_error(a, gt.matrix(), c));
  losses.scale = std::abs(scale_error(a, est.matrix(), c) -
                          scale_error(a, gt.matrix(), c));
  return losses;
}

CombinedLoss combined_loss(std::span<const Correspondence> correspondences,
                           const ModelMatrix& est, const ModelMatrix& gt,
                           const AffineLossWeights& weights,
                           std::span<const LossTerm> extra_terms) {
  if (weights.orientation < 0.0 || weights.scale < 0.0) {
    throw Error(ErrorCode::kInvalidInput, "loss weights must be non-negative");
  }
  CombinedLoss loss;
  if (correspondences.empty()) {
    loss.empty_input = true;
    return loss;
  }
  const bool affine_active = weights.orientation > 0.0 || weights.scale > 0.0;
  if (affine_active) {
    for (const Correspondence& c : correspondences) {
      try {
        const AffineLosses l = affine_losses(affinity_from_sift(c), est, gt, c);
        loss.affine += weights.orientation * l.orientation + weights.scale * l.scale;
        ++loss.used;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kDegenerateGeometry) throw;
        ++loss.skipped;
      }
    }
  }
  for (const LossTerm& term : extra_terms) {
    loss.extra += term(est, gt, correspondences);
  }
  loss.value = loss.affine + loss.extra;
  return loss;
}

}  // namespace twoview
