#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support/fixtures.hpp"
#include "twoview/affine_epipolar.hpp"
#include "twoview/error.hpp"

namespace twoview {
namespace {

constexpr double kPi = std::numbers::pi;

Correspondence at_origin() { return make_correspondence(Vec2(0, 0), Vec2(0, 0), 0, 1, 0, 1); }

/// F with (F^T p2)[0:2] = n1 and (F p1)[0:2] = n2 at p1 = p2 = 0.
Mat3 f_with_normals(const Vec2& n1, const Vec2& n2) {
  Mat3 f = Mat3::Zero();
  f(0, 2) = n2.x();
  f(1, 2) = n2.y();
  f(2, 0) = n1.x();
  f(2, 1) = n1.y();
  return f;
}

/// acos of the normalized dot product of inv(A)^T n1 and n2, with the
/// inverse written out by cofactors.
double naive_orientation(const Mat2& a, const Vec2& n1, const Vec2& n2) {
  const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  const double ia00 = a(1, 1) / det, ia01 = -a(0, 1) / det;
  const double ia10 = -a(1, 0) / det, ia11 = a(0, 0) / det;
  // (A^-1)^T n1
  const double vx = ia00 * n1.x() + ia10 * n1.y();
  const double vy = ia01 * n1.x() + ia11 * n1.y();
  double cosine = (vx * n2.x() + vy * n2.y()) /
                  (std::hypot(vx, vy) * std::hypot(n2.x(), n2.y()));
  cosine = std::max(-1.0, std::min(1.0, cosine));
  return std::acos(cosine);
}

TEST(AffinityFromSift, IdentityAndDirectFormula) {
  EXPECT_EQ(affinity_from_sift(make_correspondence(Vec2(0, 0), Vec2(1, 1), 0.7, 3, 0.7, 3)).a,
            Mat2::Identity());
  const AffineApprox a =
      affinity_from_sift(make_correspondence(Vec2(0, 0), Vec2(1, 1), 0.0, 1.0, kPi / 2, 2.0));
  Mat2 expected;
  expected << 0, -2, 2, 0;
  EXPECT_LT((a.a - expected).norm(), 1e-15);
  EXPECT_DOUBLE_EQ(a.scale, 2.0);
}

TEST(AffinityFromSift, DeterminantAndDecomposition) {
  Rng rng(21);
  for (int i = 0; i < 1000; ++i) {
    const Correspondence c = make_correspondence(Vec2(0, 0), Vec2(0, 0), rng.uniform(0, 7),
                                                 rng.uniform(0.5, 8), rng.uniform(0, 7),
                                                 rng.uniform(0.5, 8));
    const AffineApprox a = affinity_from_sift(c);
    EXPECT_NEAR(std::sqrt(a.a.determinant()), c.q2 / c.q1, 1e-12 * c.q2 / c.q1);
    const AffineApprox back = affinity_from_matrix(a.a);
    EXPECT_NEAR(back.scale, c.q2 / c.q1, 1e-12 * c.q2 / c.q1);
    const double d = wrap_angle(back.alpha) - wrap_angle(c.alpha2 - c.alpha1);
    EXPECT_LT(std::min(std::abs(d), 2 * kPi - std::abs(d)), 1e-12);
  }
}

TEST(AffinityFromSift, RejectsNonPositiveScale) {
  Correspondence c = at_origin();
  c.q1 = -1.0;
  try {
    affinity_from_sift(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
  }
  Mat2 reflection;
  reflection << 1, 0, 0, -1;
  EXPECT_THROW(affinity_from_matrix(reflection), Error);
}

TEST(HomographyJacobian, MatchesFiniteDifferences) {
  Rng rng(22);
  for (int i = 0; i < 20; ++i) {
    Mat3 h = Mat3::Identity();
    for (int k = 0; k < 9; ++k) h(k / 3, k % 3) += 0.1 * rng.gaussian();
    const Vec2 p(rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Mat2 j = homography_jacobian(h, p);
    const double step = 1e-6;
    for (int c = 0; c < 2; ++c) {
      Vec2 dp = Vec2::Zero();
      dp[c] = step;
      const Vec2 col = ((h * (p + dp).homogeneous()).hnormalized() -
                        (h * (p - dp).homogeneous()).hnormalized()) /
                       (2 * step);
      EXPECT_LT((col - j.col(c)).norm(), 1e-7);
    }
  }
}

TEST(OrientationError, PlaneInducedAffinityIsAntiParallel) {
  Rng rng(23);
  for (int i = 0; i < 200; ++i) {
    const auto pc = testing::plane_affine_case(rng);
    const AffineApprox a = affinity_from_matrix(pc.a);
    EXPECT_NEAR(orientation_error(a, pc.f, pc.c), kPi, 1e-6);
    // The exact relation behind it: A^-T n1 = -n2.
    const EpipolarNormals n = epipolar_line_normals(pc.f, pc.c);
    const Vec2 mapped = pc.a.inverse().transpose() * n.n1;
    EXPECT_LT((mapped + n.n2).norm(), 1e-9 * n.n2.norm());
  }
}

TEST(OrientationError, RotationExample) {
  Mat2 r;
  r << 0, -1, 1, 0;
  const Mat3 f = f_with_normals(Vec2(1, 0), Vec2(0, 1));
  EXPECT_NEAR(orientation_error(affinity_from_matrix(r), f, at_origin()), 0.0, 1e-12);
}

TEST(OrientationError, MatchesNaiveOracle) {
  Rng rng(24);
  for (int i = 0; i < 200; ++i) {
    Mat2 a;
    a << rng.uniform(0.5, 2), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0.5, 2);
    Mat3 f;
    for (int k = 0; k < 9; ++k) f(k / 3, k % 3) = rng.gaussian();
    const Correspondence c = make_correspondence(Vec2(rng.gaussian(), rng.gaussian()),
                                                 Vec2(rng.gaussian(), rng.gaussian()), 0, 1, 0, 1);
    const EpipolarNormals n = epipolar_line_normals(f, c);
    EXPECT_NEAR(orientation_error(affinity_from_matrix(a), f, c),
                naive_orientation(a, n.n1, n.n2), 1e-10);
    // Positive rescaling of F leaves both errors unchanged.
    EXPECT_NEAR(orientation_error(affinity_from_matrix(a), 3.7 * f, c),
                orientation_error(affinity_from_matrix(a), f, c), 1e-12);
    EXPECT_NEAR(scale_error(affinity_from_matrix(a), 3.7 * f, c),
                scale_error(affinity_from_matrix(a), f, c), 1e-12);
  }
}

TEST(OrientationError, DegenerateInputs) {
  const Mat3 f = f_with_normals(Vec2(0, 0), Vec2(0, 1));
  try {
    orientation_error(AffineApprox{}, f, at_origin());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateGeometry);
  }
  AffineApprox singular;
  singular.a = Mat2::Zero();
  EXPECT_THROW(orientation_error(singular, f_with_normals(Vec2(1, 0), Vec2(0, 1)), at_origin()),
               Error);
}

TEST(ScaleError, DirectSubstitution) {
  AffineApprox two;
  two.a = 2.0 * Mat2::Identity();
  EXPECT_NEAR(scale_error(two, f_with_normals(Vec2(1, 0), Vec2(0, 2)), at_origin()), 0.0, 1e-15);
  EXPECT_NEAR(scale_error(AffineApprox{}, f_with_normals(Vec2(1, 0), Vec2(0, 3)), at_origin()),
              -2.0, 1e-15);
  try {
    scale_error(AffineApprox{}, f_with_normals(Vec2(0, 0), Vec2(0, 3)), at_origin());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateGeometry);
  }
}

TEST(ScaleError, NormRelationOfPlaneInducedAffinity) {
  // What holds exactly for the first-order affinity is |A^-T n1| = |n2|;
  // sqrt(det A) equals the normal ratio only when A is a similarity.
  Rng rng(25);
  for (int i = 0; i < 200; ++i) {
    const auto pc = testing::plane_affine_case(rng);
    const EpipolarNormals n = epipolar_line_normals(pc.f, pc.c);
    EXPECT_NEAR((pc.a.inverse().transpose() * n.n1).norm(), n.n2.norm(), 1e-9 * n.n2.norm());
  }
  Mat2 similarity;
  similarity << 1.2, -0.5, 0.5, 1.2;
  const double s = std::sqrt(similarity.determinant());
  const Vec2 n1(0.3, 0.8);
  const Vec2 n2 = -(similarity.inverse().transpose() * n1);
  const Mat3 f = f_with_normals(n1, n2);
  // For a similarity |n2| / |n1| = 1 / s.
  EXPECT_NEAR(scale_error(affinity_from_matrix(similarity), f, at_origin()), s - 1.0 / s, 1e-12);
}

TEST(AffineLosses, ZeroForIdenticalModels) {
  Rng rng(26);
  for (int i = 0; i < 100; ++i) {
    const auto pc = testing::plane_affine_case(rng);
    const ModelMatrix gt(pc.f, ModelKind::kFundamental);
    Correspondence c = pc.c;
    c.alpha1 = 0.3;
    c.alpha2 = 1.1;
    c.q2 = 1.7;
    const AffineApprox sift = affinity_from_sift(c);
    const AffineLosses l = affine_losses(sift, gt, gt, c);
    EXPECT_EQ(l.orientation, 0.0);
    EXPECT_EQ(l.scale, 0.0);
  }
}

TEST(AffineLosses, MatchPerturbedRecomputation) {
  Rng rng(27);
  for (int i = 0; i < 100; ++i) {
    const auto pc = testing::plane_affine_case(rng);
    Mat3 perturbed = pc.f;
    for (int k = 0; k < 9; ++k) perturbed(k / 3, k % 3) *= 1.0 + 0.05 * rng.gaussian();
    const AffineApprox a = affinity_from_matrix(pc.a);
    const AffineLosses l = affine_losses(a, ModelMatrix(perturbed, ModelKind::kFundamental),
                                         ModelMatrix(pc.f, ModelKind::kFundamental), pc.c);
    EXPECT_NEAR(l.orientation,
                std::abs(orientation_error(a, perturbed, pc.c) - orientation_error(a, pc.f, pc.c)),
                1e-12);
    EXPECT_NEAR(l.scale, std::abs(scale_error(a, perturbed, pc.c) - scale_error(a, pc.f, pc.c)),
                1e-12);
    EXPECT_GE(l.orientation, 0.0);
    EXPECT_GE(l.scale, 0.0);
  }
}

TEST(AffineLosses, KindMismatch) {
  const Mat3 f = f_with_normals(Vec2(1, 0), Vec2(0, 1));
  try {
    affine_losses(AffineApprox{}, ModelMatrix(f, ModelKind::kEssential),
                  ModelMatrix(f, ModelKind::kFundamental), at_origin());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
  }
}

TEST(CombinedLoss, ZeroWeightsAndEmptyInput) {
  const ModelMatrix a(f_with_normals(Vec2(1, 0), Vec2(0, 1)), ModelKind::kFundamental);
  const ModelMatrix b(f_with_normals(Vec2(1, 1), Vec2(0, 3)), ModelKind::kFundamental);
  const std::vector<Correspondence> pts{at_origin()};
  EXPECT_EQ(combined_loss(pts, a, b, {0.0, 0.0}).value, 0.0);
  const CombinedLoss empty = combined_loss({}, a, b, {});
  EXPECT_EQ(empty.value, 0.0);
  EXPECT_TRUE(empty.empty_input);
  EXPECT_EQ(combined_loss(pts, a, a, {2.5, 7.0}).affine, 0.0);
  EXPECT_THROW(combined_loss(pts, a, b, {-1.0, 0.0}), Error);
}

TEST(CombinedLoss, WeightedSumOfHandValues) {
  // Estimated normals at p1 = p2 = 0: n1 = (1, 0), n2 = (0, 2).
  // Ground truth normals: n1 = (1, 0), n2 = (0, 1).
  // Correspondence 1: A = I        -> f_est = f_gt = pi/2; g_est = 1 - 2, g_gt = 1 - 1.
  // Correspondence 2: A = R(pi/2)  -> f_est = f_gt = 0;    same scale terms.
  const ModelMatrix est(f_with_normals(Vec2(1, 0), Vec2(0, 2)), ModelKind::kFundamental);
  const ModelMatrix gt(f_with_normals(Vec2(1, 0), Vec2(0, 1)), ModelKind::kFundamental);
  const Correspondence c1 = make_correspondence(Vec2(0, 0), Vec2(0, 0), 0.0, 1.0, 0.0, 1.0);
  const Correspondence c2 = make_correspondence(Vec2(0, 0), Vec2(0, 0), 0.0, 1.0, kPi / 2, 1.0);
  const std::vector<Correspondence> pts{c1, c2};
  const std::vector<LossTerm> extra{
      [](const ModelMatrix&, const ModelMatrix&, std::span<const Correspondence> s) {
        return -static_cast<double>(s.size());
      }};
  const CombinedLoss loss = combined_loss(pts, est, gt, {0.5, 3.0}, extra);
  EXPECT_NEAR(loss.affine, 0.5 * 0.0 + 3.0 * 1.0 + 0.5 * 0.0 + 3.0 * 1.0, 1e-12);
  EXPECT_NEAR(loss.extra, -2.0, 0.0);
  EXPECT_NEAR(loss.value, 4.0, 1e-12);
  EXPECT_EQ(loss.used, 2u);
}

TEST(CombinedLoss, SkipsDegenerateCorrespondences) {
  const ModelMatrix est(f_with_normals(Vec2(1, 0), Vec2(0, 2)), ModelKind::kFundamental);
  const ModelMatrix gt(f_with_normals(Vec2(0, 0), Vec2(0, 1)), ModelKind::kFundamental);
  const std::vector<Correspondence> pts{at_origin()};
  const CombinedLoss loss = combined_loss(pts, est, gt, {});
  EXPECT_EQ(loss.skipped, 1u);
  EXPECT_EQ(loss.used, 0u);
  EXPECT_EQ(loss.value, 0.0);
}

}  // namespace
}  // namespace twoview
