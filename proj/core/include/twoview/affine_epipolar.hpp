#pragma once

#include <functional>
#include <span>
#include <vector>

#include "twoview/geometry.hpp"

namespace twoview {

/// Local affine map between the image patches around p1 and p2.
struct AffineApprox {
  Mat2 a = Mat2::Identity();
  double alpha = 0.0;  // rotation component, radians
  double scale = 1.0;  // sqrt(det a)
};

/// A = R(alpha2 - alpha1) * (q2/q1) I. Throws Error(kInvalidInput) on a
/// non-positive scale.
AffineApprox affinity_from_sift(const Correspondence& c);

/// Wraps a general 2x2 map. alpha is the angle of its closest rotation.
/// Throws Error(kInvalidInput) unless det a > 0.
AffineApprox affinity_from_matrix(const Mat2& a);

/// First-order approximation at p of the map x -> dehomogenize(H x~).
Mat2 homography_jacobian(const Mat3& h, const Vec2& p);

/// Angle in [0, pi] between A^-T n1 and n2. Equals pi when the affine
/// epipolar constraint A^-T n1 = -n2 holds.
/// Throws Error(kDegenerateGeometry) for singular A or vanishing normals.
double orientation_error(const AffineApprox& a, const Mat3& f,
                         const Correspondence& c);

/// sqrt(det A) - |(F p1)[0:2]| / |(F^T p2)[0:2]|, signed.
/// Throws Error(kDegenerateGeometry) when the denominator vanishes.
double scale_error(const AffineApprox& a, const Mat3& f,
                   const Correspondence& c);

struct AffineLosses {
  double orientation = 0.0;
  double scale = 0.0;
};

/// |f(A, est) - f(A, gt)| and |g(A, est) - g(A, gt)|.
/// Throws Error(kInvalidInput) when est and gt are of different kinds.
AffineLosses affine_losses(const AffineApprox& a, const ModelMatrix& est,
                           const ModelMatrix& gt, const Correspondence& c);

struct AffineLossWeights {
  double orientation = 1.0;
  double scale = 1.0;
};

/// Additional pluggable loss term, e.g. pose error or negative inlier count.
using LossTerm = std::function<double(const ModelMatrix& est,
                                      const ModelMatrix& gt,
                                      std::span<const Correspondence>)>;

struct CombinedLoss {
  double value = 0.0;
  double affine = 0.0;
  double extra = 0.0;
  std::size_t used = 0;
  std::size_t skipped = 0;  // correspondences with degenerate geometry
  bool empty_input = false;
};

/// Sum over the correspondences of w_ori L_ori + w_scale L_scale, plus the
/// extra terms. The affinity of each correspondence comes from its SIFT frame.
/// Throws Error(kInvalidInput) for negative weights.
CombinedLoss combined_loss(std::span<const Correspondence> correspondences,
                           const ModelMatrix& est, const ModelMatrix& gt,
                           const AffineLossWeights& weights,
                           std::span<const LossTerm> extra_terms = {});

}  // namespace twoview
