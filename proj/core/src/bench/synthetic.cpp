#include "twoview/bench/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Geometry>

#include "twoview/affine_epipolar.hpp"
#include "twoview/error.hpp"
#include "twoview/samplers.hpp"

namespace twoview::bench {

namespace {

Vec3 random_unit(Rng& rng) {
  Vec3 v(rng.gaussian(), rng.gaussian(), rng.gaussian());
  while (v.norm() < 1e-9) v = Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian());
  return v.normalized();
}

bool in_image(const Vec2& p, const SyntheticParams& params) {
  return p.x() >= 0.0 && p.y() >= 0.0 && p.x() < params.width &&
         p.y() < params.height;
}

Vec2 project(const CameraIntrinsics& k, const Vec3& x) {
  return (k.matrix() * x).hnormalized();
}

}  // namespace

ScenePair generate_synthetic(const SyntheticParams& params) {
  if (params.n < 8) throw Error(ErrorCode::kInvalidInput, "n must be >= 8");
  if (!(params.inlier_ratio > 0.0 && params.inlier_ratio <= 1.0)) {
    throw Error(ErrorCode::kInvalidInput, "inlier_ratio must lie in (0, 1]");
  }
  if (!(params.noise_px >= 0.0) || !(params.motion > 0.0) || !(params.focal > 0.0) ||
      params.width <= 0 || params.height <= 0) {
    throw Error(ErrorCode::kInvalidInput, "invalid synthetic scene parameters");
  }
  Rng rng(params.seed);
  const CameraIntrinsics k = CameraIntrinsics::from_pinhole(
      params.focal, params.focal, 0.5 * params.width, 0.5 * params.height);

  // Point cloud centred 6 units in front of the first camera.
  const Vec3 centre(0.0, 0.0, 6.0);
  const double half_width = 6.0 * 0.45 * params.width / params.focal;
  const double half_height = 6.0 * 0.45 * params.height / params.focal;

  // Second camera: offset sideways, rotated by a random small angle and
  // turned back toward the cloud centre.
  Vec3 baseline_dir = random_unit(rng);
  baseline_dir.z() *= 0.3;
  baseline_dir.normalize();
  const Vec3 c2 = baseline_dir * (params.motion * 0.25 * centre.z());
  const double max_angle = 15.0 * params.motion * std::numbers::pi / 180.0;
  const Mat3 jitter =
      Eigen::AngleAxisd(rng.uniform(0.0, max_angle), random_unit(rng)).toRotationMatrix();
  const Vec3 look = (centre - c2).normalized();
  const Mat3 towards =
      Eigen::Quaterniond::FromTwoVectors(look, Vec3::UnitZ()).toRotationMatrix();
  const Mat3 rot = jitter * towards;
  const Vec3 t = -rot * c2;
  const Pose pose = make_pose(rot, t);

  ScenePair scene;
  scene.id = "synthetic_" + std::to_string(params.seed);
  scene.k1 = k;
  scene.k2 = k;
  scene.gt_pose = pose;
  scene.gt_model = ModelMatrix::normalized(
      fundamental_from_essential(essential_from_pose(pose), k, k), ModelKind::kFundamental);

  const auto inliers = static_cast<std::size_t>(
      std::llround(static_cast<double>(params.n) * params.inlier_ratio));
  std::vector<Correspondence> points;
  std::vector<bool> labels;
  points.reserve(params.n);

  std::size_t attempts = 0;
  while (points.size() < inliers) {
    if (++attempts > 1000 * params.n) {
      throw Error(ErrorCode::kInvalidInput, "cannot place points in both views");
    }
    const Vec3 x1(centre.x() + rng.uniform(-half_width, half_width),
                  centre.y() + rng.uniform(-half_height, half_height),
                  centre.z() + rng.uniform(-2.0, 2.0));
    const Vec3 x2 = rot * x1 + t;
    if (x2.z() <= 0.1) continue;
    const Vec2 p1 = project(k, x1);
    const Vec2 p2 = project(k, x2);
    if (!in_image(p1, params) || !in_image(p2, params)) continue;

    // Local plane through x1 with a normal facing the first camera.
    Vec3 normal = random_unit(rng);
    if (normal.dot(x1) > 0.0) normal = -normal;
    if (normal.dot(-x1.normalized()) < 0.3) continue;
    const double d = normal.dot(x1);
    // Plane n^T X = d in the first frame: X2 = (R + t n^T / d) X1.
    const Mat3 h = k.matrix() * (rot + t * normal.transpose() / d) * k.inverse();
    const Mat2 a = homography_jacobian(h, p1);
    if (!(a.determinant() > 0.0)) continue;
    const AffineApprox approx = affinity_from_matrix(a);

    const double alpha1 = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double q1 = rng.uniform(1.0, 5.0);
    const Vec2 noise1(rng.gaussian(), rng.gaussian());
    const Vec2 noise2(rng.gaussian(), rng.gaussian());
    points.push_back(make_correspondence(
        p1 + params.noise_px * noise1, p2 + params.noise_px * noise2, alpha1, q1,
        alpha1 + approx.alpha, q1 * approx.scale, rng.uniform(0.1, 0.7)));
    labels.push_back(true);
  }
  while (points.size() < params.n) {
    const Vec2 p1(rng.uniform(0.0, params.width), rng.uniform(0.0, params.height));
    const Vec2 p2(rng.uniform(0.0, params.width), rng.uniform(0.0, params.height));
    points.push_back(make_correspondence(
        p1, p2, rng.uniform(0.0, 2.0 * std::numbers::pi), rng.uniform(1.0, 5.0),
        rng.uniform(0.0, 2.0 * std::numbers::pi), rng.uniform(1.0, 5.0),
        rng.uniform(0.6, 1.0)));
    labels.push_back(false);
  }

  // Fisher-Yates with the scene generator so that index order carries no label.
  std::vector<std::size_t> order(params.n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = params.n - 1; i > 0; --i) {
    std::swap(order[i], order[rng.below(i + 1)]);
  }
  scene.correspondences.reserve(params.n);
  scene.labels.reserve(params.n);
  for (std::size_t i : order) {
    scene.correspondences.push_back(points[i]);
    scene.labels.push_back(labels[i]);
  }
  return scene;
}

}  // namespace twoview::bench
