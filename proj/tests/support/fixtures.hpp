#pragma once

#include <vector>

#include <Eigen/Geometry>

#include "twoview/geometry.hpp"
#include "twoview/samplers.hpp"

namespace twoview::testing {

/// Random well-conditioned relative pose and a calibrated point cloud in
/// front of both cameras, in normalized coordinates.
struct CalibratedScene {
  Pose pose;
  std::vector<Vec3> points;  // first camera frame
  std::vector<Correspondence> correspondences;
};

inline Vec3 random_direction(Rng& rng) {
  return Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian()).normalized();
}

inline Pose random_pose(Rng& rng, double max_angle = 0.5) {
  const Mat3 r =
      Eigen::AngleAxisd(rng.uniform(0.05, max_angle), random_direction(rng)).toRotationMatrix();
  Vec3 t = random_direction(rng);
  return make_pose(r, t);
}

inline CalibratedScene calibrated_scene(Rng& rng, std::size_t n, double max_angle = 0.5) {
  CalibratedScene s;
  s.pose = random_pose(rng, max_angle);
  while (s.points.size() < n) {
    const Vec3 x(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(4.0, 8.0));
    const Vec3 x2 = s.pose.R * x + s.pose.t;
    if (x2.z() < 0.5) continue;
    s.points.push_back(x);
    Correspondence c;
    c.p1 = x.hnormalized();
    c.p2 = x2.hnormalized();
    s.correspondences.push_back(c);
  }
  return s;
}

inline Mat3 pixel_k(double f = 800.0) {
  Mat3 k;
  k << f, 0, 512, 0, f, 384, 0, 0, 1;
  return k;
}

/// Pixel-space version of a calibrated scene with the same focal in both views.
inline std::vector<Correspondence> to_pixels(const std::vector<Correspondence>& normalized,
                                             const Mat3& k) {
  std::vector<Correspondence> out = normalized;
  for (auto& c : out) {
    c.p1 = (k * c.p1.homogeneous()).hnormalized();
    c.p2 = (k * c.p2.homogeneous()).hnormalized();
  }
  return out;
}

inline Mat3 gt_fundamental(const Pose& pose, const Mat3& k) {
  const CameraIntrinsics ki(k);
  return fundamental_from_essential(essential_from_pose(pose), ki, ki);
}

}  // namespace twoview::testing

#include "twoview/affine_epipolar.hpp"

namespace twoview::testing {

/// A point on a random scene plane seen by two pixel cameras, with the
/// exact local affinity (Jacobian of the plane-induced homography).
struct PlaneAffineCase {
  Mat3 f;
  Correspondence c;
  Mat2 a;
};

inline PlaneAffineCase plane_affine_case(Rng& rng) {
  const Mat3 k1m = pixel_k(rng.uniform(500.0, 1200.0));
  const Mat3 k2m = pixel_k(rng.uniform(500.0, 1200.0));
  const CameraIntrinsics k1(k1m), k2(k2m);
  for (;;) {
    const Pose pose = random_pose(rng);
    const Vec3 x(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5), rng.uniform(4.0, 8.0));
    const Vec3 x2 = pose.R * x + pose.t;
    if (x2.z() < 0.5) continue;
    Vec3 n = random_direction(rng);
    if (n.dot(x) > 0) n = -n;
    if (n.dot(-x.normalized()) < 0.3) continue;
    const double d = n.dot(x);
    const Mat3 h = k2m * (pose.R + pose.t * n.transpose() / d) * k1.inverse();
    PlaneAffineCase out;
    out.f = fundamental_from_essential(essential_from_pose(pose), k1, k2);
    out.c.p1 = (k1m * x).hnormalized();
    out.c.p2 = (k2m * x2).hnormalized();
    out.a = homography_jacobian(h, out.c.p1);
    if (!(out.a.determinant() > 0.0)) continue;
    return out;
  }
}

}  // namespace twoview::testing
