#pragma once

#include <span>
#include <vector>

#include "twoview/geometry.hpp"

namespace twoview {

inline constexpr std::size_t kFundamentalSampleSize = 7;
inline constexpr std::size_t kEssentialSampleSize = 5;

inline constexpr std::size_t minimal_sample_size(ModelKind kind) {
  return kind == ModelKind::kEssential ? kEssentialSampleSize
                                       : kFundamentalSampleSize;
}

/// Seven-point fundamental matrix solver. Returns the real roots of
/// det(F1 + lambda F2) = 0, one or three Frobenius-normalized models.
/// Throws Error(kInvalidInput) unless exactly 7 points are given, and
/// Error(kDegenerateSample) when the design matrix has rank < 7.
std::vector<ModelMatrix> fundamental_7pt(std::span<const Correspondence> points);

/// Five-point essential matrix solver (Groebner basis / action matrix) on
/// normalized coordinates. Returns up to 10 Frobenius-normalized models.
/// Throws Error(kInvalidInput) unless exactly 5 points are given, and
/// Error(kDegenerateSample) when the epipolar constraints have rank < 5.
std::vector<ModelMatrix> essential_5pt(std::span<const Correspondence> points);

/// Hartley-normalized weighted DLT over all points with weight > 0: each
/// row is scaled by sqrt(weight). The result is projected to rank 2
/// (fundamental) or onto the essential manifold (two equal singular values).
/// An empty weight span means unit weights. Throws
/// Error(kInsufficientSupport) for fewer than 8 positively weighted points
/// and Error(kDegenerateGeometry) when the normal system has a degenerate
/// null space.
ModelMatrix weighted_8pt(std::span<const Correspondence> points,
                         std::span<const double> weights, ModelKind kind);

/// Closest matrix with singular values (s, s, 0).
Mat3 project_to_essential(const Mat3& m);
/// Closest rank-2 matrix.
Mat3 project_to_rank2(const Mat3& m);

/// Similarity moving the centroid to the origin and the mean distance to
/// sqrt(2). Points with zero weight are ignored.
Mat3 hartley_normalization(std::span<const Vec2> points,
                           std::span<const double> weights = {});

}  // namespace twoview
