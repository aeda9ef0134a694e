#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "twoview/bench/synthetic.hpp"
#include "twoview/error.hpp"
#include "twoview/estimator.hpp"
#include "twoview/sigma_consensus.hpp"

namespace twoview {
namespace {

struct Problem {
  bench::ScenePair scene;
  std::vector<Correspondence> normalized;
  double focal = 0.0;
};

Problem make_problem(std::size_t n, double ratio, double noise, std::uint64_t seed) {
  bench::SyntheticParams p;
  p.n = n;
  p.inlier_ratio = ratio;
  p.noise_px = noise;
  p.seed = seed;
  Problem out;
  out.scene = bench::generate_synthetic(p);
  for (const auto& c : out.scene.correspondences) {
    out.normalized.push_back(normalize_correspondence(c, *out.scene.k1, *out.scene.k2));
  }
  out.focal = out.scene.k1->focal();
  return out;
}

EstimatorConfig essential_config(double focal) {
  EstimatorConfig config;
  config.problem = ModelKind::kEssential;
  config.residual_scale = focal;
  config.sigma_max = 0.75;
  return config;
}

TEST(TerminationIterations, Examples) {
  EXPECT_EQ(termination_iterations(1.0, 5, 0.99, 50, 1000), 50);
  EXPECT_EQ(termination_iterations(0.0, 5, 0.99, 50, 1000), 1000);
  EXPECT_EQ(termination_iterations(0.5, 5, 0.99, 1, 1000), 146);
  EXPECT_EQ(termination_iterations(0.5, 5, 0.99, 50, 1000), 146);
  EXPECT_EQ(termination_iterations(0.5, 5, 0.99, 200, 1000), 200);
  EXPECT_EQ(termination_iterations(0.1, 7, 0.99, 50, 1000), 1000);
  const double expected = std::ceil(std::log(0.05) / std::log(1.0 - std::pow(0.7, 7)));
  EXPECT_EQ(termination_iterations(0.7, 7, 0.95, 1, 100000), static_cast<int>(expected));
}

TEST(SnnPrefilter, Examples) {
  std::vector<Correspondence> pts(6);
  const double ratios[6] = {0.9, 0.5, 0.81, 0.8, 0.2, 0.95};
  for (int i = 0; i < 6; ++i) pts[i].snn_ratio = ratios[i];

  EXPECT_TRUE(snn_prefilter(std::vector<Correspondence>(3, pts[0]), 0.8).kept.empty());
  const PrefilterResult all = snn_prefilter(pts, 1.0);
  EXPECT_EQ(all.indices, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  ASSERT_EQ(all.kept.size(), 6u);
  EXPECT_EQ(*all.kept[2].snn_ratio, 0.81);

  const PrefilterResult mixed = snn_prefilter(pts, 0.8);
  std::vector<std::size_t> naive;
  for (std::size_t i = 0; i < 6; ++i) {
    if (ratios[i] <= 0.8) naive.push_back(i);
  }
  EXPECT_EQ(mixed.indices, naive);
  EXPECT_EQ(mixed.missing_ratio, 0u);

  pts[0].snn_ratio.reset();
  const PrefilterResult missing = snn_prefilter(pts, 0.1);
  EXPECT_EQ(missing.missing_ratio, 1u);
  EXPECT_EQ(missing.indices, (std::vector<std::size_t>{0}));
}

TEST(Estimate, InsufficientPointsAndValidation) {
  const Problem p = make_problem(30, 1.0, 0.0, 1);
  const std::span<const Correspondence> four(p.normalized.data(), 4);
  try {
    estimate(four, {}, essential_config(p.focal));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInsufficientPoints);
  }
  EstimatorConfig bad = essential_config(p.focal);
  bad.confidence = 1.0;
  EXPECT_THROW(estimate(p.normalized, {}, bad), Error);
  bad = essential_config(p.focal);
  bad.min_iterations = 10;
  bad.max_iterations = 5;
  EXPECT_THROW(estimate(p.normalized, {}, bad), Error);
}

TEST(Estimate, OutlierFreeSceneAnySampler) {
  for (auto kind : {SamplerKind::kUniform, SamplerKind::kProsac, SamplerKind::kCategorical,
                    SamplerKind::kAr}) {
    const Problem p = make_problem(200, 1.0, 0.0, 2);
    std::vector<double> snn;
    for (const auto& c : p.normalized) snn.push_back(*c.snn_ratio);
    const std::vector<double> priors = rank_prior_from_snn(snn);
    EstimatorConfig config = essential_config(p.focal);
    config.sampler = kind;
    const EstimationReport r = estimate(p.normalized, priors, config);
    EXPECT_LE(r.iterations, config.min_iterations);
    const Pose pose = decompose_essential(r.model, p.normalized);
    EXPECT_LT(pose_error_deg(pose, *p.scene.gt_pose), 0.1) << to_string(kind);
    EXPECT_EQ(r.inliers.size(), p.normalized.size());
  }
}

TEST(Estimate, OraclePriorsGiveAllInlierSampleQuickly) {
  int successes = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Problem p = make_problem(500, 0.4, 1.0, 1000 + seed);
    std::vector<double> priors;
    for (bool inlier : p.scene.labels) priors.push_back(inlier ? 0.99 : 0.01);
    EstimatorConfig config = essential_config(p.focal);
    config.seed = seed;
    config.max_iterations = 5;
    config.min_iterations = 1;
    config.fixed_iterations = true;
    int first = 0;
    estimate(p.normalized, priors, config, [&](int iteration, std::span<const std::size_t> s) {
      if (first) return;
      if (std::all_of(s.begin(), s.end(), [&](std::size_t i) { return p.scene.labels[i]; })) {
        first = iteration;
      }
    });
    if (first >= 1 && first <= 5) ++successes;
  }
  EXPECT_GE(successes, 190);
}

TEST(Estimate, ReportInvariants) {
  const Problem p = make_problem(400, 0.5, 1.0, 3);
  std::vector<double> snn;
  for (const auto& c : p.normalized) snn.push_back(*c.snn_ratio);
  const std::vector<double> priors = rank_prior_from_snn(snn);
  EstimatorConfig config = essential_config(p.focal);
  config.record_trace = true;
  config.max_iterations = 300;
  const EstimationReport r = estimate(p.normalized, priors, config);

  ASSERT_EQ(r.trace.best_quality.size(), static_cast<std::size_t>(r.iterations));
  for (std::size_t i = 1; i < r.trace.best_quality.size(); ++i) {
    EXPECT_GE(r.trace.best_quality[i], r.trace.best_quality[i - 1]);
  }
  const SigmaParams params(config.sigma_max / config.residual_scale);
  EXPECT_NEAR(r.quality, quality(r.model.matrix(), p.normalized, params, ResidualKind::kSampson),
              1e-12 * r.quality);
  std::vector<std::size_t> recomputed;
  for (std::size_t i = 0; i < p.normalized.size(); ++i) {
    if (sampson_distance(r.model.matrix(), p.normalized[i]) < params.tau_max()) {
      recomputed.push_back(i);
    }
  }
  EXPECT_EQ(recomputed, r.inliers);
  EXPECT_TRUE(r.model.satisfies_invariants());
}

TEST(Estimate, SeededRunsAreIdentical) {
  const Problem p = make_problem(300, 0.5, 1.0, 4);
  std::vector<double> snn;
  for (const auto& c : p.normalized) snn.push_back(*c.snn_ratio);
  const std::vector<double> priors = rank_prior_from_snn(snn);
  for (double eps : {0.0, 0.0005}) {
    EstimatorConfig config = essential_config(p.focal);
    config.sampler_settings.ar.epsilon_amplitude = eps;
    config.seed = 17;
    config.record_trace = true;
    const EstimationReport a = estimate(p.normalized, priors, config);
    const EstimationReport b = estimate(p.normalized, priors, config);
    EXPECT_EQ(a.model, b.model);
    EXPECT_EQ(a.inliers, b.inliers);
    EXPECT_EQ(a.iterations, b.iterations);
    EXPECT_EQ(a.trace.best_quality, b.trace.best_quality);
  }
}

TEST(Estimate, FundamentalInPixels) {
  const Problem p = make_problem(500, 0.5, 1.0, 5);
  for (std::size_t sample_size : {7u, 8u}) {
    EstimatorConfig config;
    config.problem = ModelKind::kFundamental;
    config.sampler = SamplerKind::kUniform;
    // 1 px noise on each coordinate: minimal models need a wider basin than
    // sigma_max = 1 px gives them.
    config.sigma_max = 2.0;
    config.fundamental_sample_size = sample_size;
    const EstimationReport r = estimate(p.scene.correspondences, {}, config);
    std::size_t true_inliers = 0;
    for (std::size_t i : r.inliers) true_inliers += p.scene.labels[i];
    EXPECT_GT(true_inliers, 230u);
    EXPECT_LT(r.inliers.size() - true_inliers, 25u);
  }
}

TEST(Estimate, CheiralityCheckKeepsValidModels) {
  const Problem p = make_problem(300, 0.6, 0.5, 6);
  EstimatorConfig config = essential_config(p.focal);
  config.sampler = SamplerKind::kUniform;
  config.cheirality_check = true;
  const EstimationReport r = estimate(p.normalized, {}, config);
  std::vector<Correspondence> support;
  for (std::size_t i : r.inliers) support.push_back(p.normalized[i]);
  const Pose pose = decompose_essential(r.model, support);
  EXPECT_LT(pose_error_deg(pose, *p.scene.gt_pose), 2.0);
}

TEST(Estimate, PureOutliersStillReturnOrFailCleanly) {
  const Problem p = make_problem(100, 0.01, 1.0, 7);
  EstimatorConfig config = essential_config(p.focal);
  config.sampler = SamplerKind::kUniform;
  config.max_iterations = 50;
  try {
    const EstimationReport r = estimate(p.normalized, {}, config);
    EXPECT_EQ(r.iterations, 50);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEstimationFailed);
  }
}

}  // namespace
}  // namespace twoview
