#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "twoview/error.hpp"
#include "twoview/sigma_consensus.hpp"
#include "twoview/solvers.hpp"

namespace twoview {
namespace {

TEST(SigmaParams, DerivedConstants) {
  const SigmaParams p(2.0);
  EXPECT_EQ(p.nu(), 4);
  EXPECT_DOUBLE_EQ(p.k(), 3.64);
  EXPECT_DOUBLE_EQ(p.tau_max(), 7.28);
  EXPECT_DOUBLE_EQ(p.c_nu(), 1.0 / (4.0 * std::tgamma(2.0)));
  EXPECT_NEAR(p.gamma_at_threshold(), boost::math::tgamma(1.5, 0.5 * 3.64 * 3.64), 1e-15);
  EXPECT_THROW(SigmaParams(0.0), Error);
  EXPECT_THROW(SigmaParams(1.0, 1), Error);
  EXPECT_THROW(SigmaParams(1.0, 4, -1.0), Error);
}

TEST(Weight, ZeroAtAndBeyondThreshold) {
  const SigmaParams p(1.3);
  EXPECT_EQ(weight(p.tau_max(), p), 0.0);
  EXPECT_EQ(weight(std::nextafter(p.tau_max(), 10.0), p), 0.0);
  EXPECT_EQ(weight(100.0, p), 0.0);
  try {
    weight(-1e-9, p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
  }
}

TEST(Weight, ZeroResidualMatchesQuadrature) {
  const SigmaParams p(1.0, 4, 3.64);
  const double reference = testing::marginal_density_quadrature(0.0, 1.0, 4, 3.64);
  EXPECT_LT(std::abs(weight(0.0, p) - reference) / reference, 1e-8);
  // Approaching from r > 0 with the sigma-space quadrature gives the same value.
  const double near_zero = testing::marginal_density_quadrature(1e-6, 1.0, 4, 3.64);
  EXPECT_LT(std::abs(weight(1e-6, p) - near_zero) / near_zero, 1e-8);
  EXPECT_LT(std::abs(near_zero - reference) / reference, 1e-6);
}

TEST(Weight, MatchesQuadratureOnRandomTuples) {
  Rng rng(31);
  for (int i = 0; i < 100; ++i) {
    const double sigma_max = rng.uniform(0.2, 5.0);
    const int nu = (i % 2 == 0) ? 4 : 2;
    const double k = rng.uniform(2.0, 4.5);
    const double r = rng.uniform(0.0, 0.999) * k * sigma_max;
    const SigmaParams p(sigma_max, nu, k);
    const double reference = testing::marginal_density_quadrature(r, sigma_max, nu, k);
    EXPECT_LT(std::abs(weight(r, p) - reference) / reference, 1e-8)
        << "r=" << r << " sigma_max=" << sigma_max << " nu=" << nu << " k=" << k;
  }
}

TEST(Weight, NonIncreasingOnDenseGrid) {
  for (int nu : {2, 4, 6}) {
    const SigmaParams p(0.75, nu);
    double previous = weight(0.0, p);
    EXPECT_GT(previous, 0.0);
    for (int i = 1; i <= 10000; ++i) {
      const double w = weight(p.tau_max() * i / 10000.0, p);
      EXPECT_GE(w, 0.0);
      EXPECT_LE(w, previous + 1e-12);
      previous = w;
    }
  }
}

TEST(WeightTable, AgreesWithClosedForm) {
  for (int nu : {2, 4}) {
    const SigmaParams p(1.7, nu);
    const WeightTable table(p);
    const double scale = weight(0.0, p);
    EXPECT_NEAR(table.max_weight(), scale, 1e-15 * scale);
    Rng rng(32);
    double worst = 0.0;
    for (int i = 0; i < 20000; ++i) {
      const double r = rng.uniform(0.0, 1.05 * p.tau_max());
      const double exact = weight(r, p);
      worst = std::max(worst, std::abs(table.weight(r) - exact) / scale);
      EXPECT_EQ(table.weight_squared(r * r) == 0.0, exact == 0.0);
    }
    EXPECT_LT(worst, 1e-12);
  }
}

TEST(MarginalLoss, DerivativeAndSaturation) {
  const SigmaParams p(1.2);
  EXPECT_EQ(marginal_loss(0.0, p), 0.0);
  for (double r : {0.05, 0.5, 1.0, 2.0, 3.5}) {
    const double h = 1e-5;
    const double derivative = (marginal_loss(r + h, p) - marginal_loss(r - h, p)) / (2 * h);
    EXPECT_NEAR(derivative, r * weight(r, p), 1e-7);
    const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double x) { return x * weight(x, p); }, 0.0, r, 10, 1e-14);
    EXPECT_NEAR(marginal_loss(r, p), integral, 1e-12);
  }
  EXPECT_DOUBLE_EQ(marginal_loss(p.tau_max(), p), marginal_loss(10 * p.tau_max(), p));
}

std::vector<Correspondence> synthetic_pixels(Rng& rng, std::size_t n, double noise,
                                             double outlier_ratio, Mat3* f_out) {
  auto scene = testing::calibrated_scene(rng, n);
  const Mat3 k = testing::pixel_k();
  *f_out = testing::gt_fundamental(scene.pose, k);
  auto pts = testing::to_pixels(scene.correspondences, k);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (rng.uniform() < outlier_ratio) {
      pts[i].p2 = Vec2(rng.uniform(0, 1024), rng.uniform(0, 768));
    } else {
      pts[i].p1 += noise * Vec2(rng.gaussian(), rng.gaussian());
      pts[i].p2 += noise * Vec2(rng.gaussian(), rng.gaussian());
    }
  }
  return pts;
}

TEST(Quality, SumOfWeightsProperties) {
  Rng rng(33);
  Mat3 f;
  auto pts = synthetic_pixels(rng, 200, 1.0, 0.4, &f);
  const SigmaParams p(2.0);
  double naive = 0.0;
  for (const auto& c : pts) naive += weight(symmetric_epipolar_distance(f, c), p);
  EXPECT_NEAR(quality(f, pts, p), naive, 1e-12 * naive);

  std::reverse(pts.begin(), pts.end());
  std::swap(pts[3], pts[77]);
  EXPECT_NEAR(quality(f, pts, p), naive, 1e-12 * naive);

  // Singleton with zero residual.
  Correspondence exact;
  exact.p1 = Vec2(0, 0);
  exact.p2 = Vec2(0, 0);
  Mat3 g;
  g << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  const SigmaParams unit(1.0);
  EXPECT_DOUBLE_EQ(quality(g, std::vector<Correspondence>{exact}, unit), weight(0.0, unit));
  // Everything beyond the threshold.
  Correspondence far = exact;
  far.p2 = Vec2(0, 10);
  EXPECT_EQ(quality(g, std::vector<Correspondence>{far, far}, unit), 0.0);
}

TEST(IrlsPolish, GroundTruthIsAFixedPoint) {
  Rng rng(34);
  Mat3 f;
  const auto pts = synthetic_pixels(rng, 100, 0.0, 0.0, &f);
  const ModelMatrix gt = ModelMatrix::normalized(f, ModelKind::kFundamental);
  const IrlsResult r = irls_polish(gt, pts, SigmaParams(1.0));
  EXPECT_LT(model_distance(r.model.matrix(), gt.matrix()), 1e-9);
}

TEST(IrlsPolish, EssentialStaysOnManifold) {
  Rng rng(35);
  auto scene = testing::calibrated_scene(rng, 150);
  for (auto& c : scene.correspondences) {
    c.p1 += 1e-3 * Vec2(rng.gaussian(), rng.gaussian());
    c.p2 += 1e-3 * Vec2(rng.gaussian(), rng.gaussian());
  }
  const ModelMatrix gt(essential_from_pose(scene.pose), ModelKind::kEssential);
  IrlsOptions options;
  options.residual = ResidualKind::kSampson;
  const IrlsResult r = irls_polish(gt, scene.correspondences, SigmaParams(3e-3), options);
  EXPECT_EQ(r.model.kind(), ModelKind::kEssential);
  EXPECT_TRUE(r.model.satisfies_invariants());
  EXPECT_LT(model_distance(r.model.matrix(), gt.matrix()), 1e-2);
}

TEST(IrlsPolish, NoSupportThrows) {
  Rng rng(36);
  Mat3 f;
  const auto pts = synthetic_pixels(rng, 50, 0.0, 0.0, &f);
  Mat3 wrong = Mat3::Zero();
  wrong(0, 1) = 1.0;
  wrong(1, 0) = -1.0;  // pure rotation about z: far from the true geometry
  wrong(2, 2) = 1e-3;
  try {
    irls_polish(ModelMatrix::normalized(wrong, ModelKind::kFundamental), pts, SigmaParams(1e-3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientSupport);
  }
}

TEST(IrlsPolish, ImprovesMinimalSampleModels) {
  Rng rng(37);
  int improved = 0;
  int trials = 0;
  for (int trial = 0; trial < 200; ++trial) {
    Mat3 f;
    auto scene = testing::calibrated_scene(rng, 300);
    const Mat3 k = testing::pixel_k();
    f = testing::gt_fundamental(scene.pose, k);
    auto pts = testing::to_pixels(scene.correspondences, k);
    std::vector<bool> inlier(pts.size(), true);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i % 10 < 3) {
        pts[i].p2 = Vec2(rng.uniform(0, 1024), rng.uniform(0, 768));
        inlier[i] = false;
      } else {
        pts[i].p1 += Vec2(rng.gaussian(), rng.gaussian());
        pts[i].p2 += Vec2(rng.gaussian(), rng.gaussian());
      }
    }
    // Minimal sample from inliers; keep the hypothesis closest to the truth.
    std::vector<Correspondence> sample;
    for (std::size_t i = 3; sample.size() < 7; i += 10) sample.push_back(pts[i]);
    std::vector<ModelMatrix> models;
    try {
      models = fundamental_7pt(sample);
    } catch (const Error&) {
      continue;
    }
    const auto best = std::min_element(models.begin(), models.end(), [&](auto& a, auto& b) {
      return model_distance(a.matrix(), f) < model_distance(b.matrix(), f);
    });
    auto mean_inlier_residual = [&](const Mat3& m) {
      double sum = 0.0;
      int count = 0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!inlier[i]) continue;
        sum += std::min(symmetric_epipolar_distance(m, pts[i]), 1e3);
        ++count;
      }
      return sum / count;
    };
    const SigmaParams p(3.0);
    IrlsResult r;
    try {
      r = irls_polish(*best, pts, p);
    } catch (const Error&) {
      ++trials;
      continue;
    }
    ++trials;
    for (std::size_t i = 1; i < r.loss_trace.size(); ++i) {
      EXPECT_LE(r.loss_trace[i], r.loss_trace[i - 1]);
    }
    if (mean_inlier_residual(r.model.matrix()) < mean_inlier_residual(best->matrix())) ++improved;
  }
  ASSERT_GE(trials, 150);
  EXPECT_GE(improved, static_cast<int>(std::ceil(0.95 * trials)))
      << improved << " of " << trials;
}

}  // namespace
}  // namespace twoview
