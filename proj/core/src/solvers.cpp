#include "twoview/solvers.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <array>
#include <cmath>
#include <numbers>

#include "twoview/error.hpp"

namespace twoview {
namespace {

using Row9 = Eigen::Matrix<double, 1, 9>;

// Coefficients of vec(F) (row-major) in x2~^T F x1~.
Row9 epipolar_row(const Vec2& x1, const Vec2& x2) {
  Row9 row;
  row << x2.x() * x1.x(), x2.x() * x1.y(), x2.x(), x2.y() * x1.x(),
      x2.y() * x1.y(), x2.y(), x1.x(), x1.y(), 1.0;
  return row;
}

Mat3 from_row_major(const Eigen::Matrix<double, 9, 1>& v) {
  Mat3 m;
  m << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
  return m;
}

// Real roots of c3 x^3 + c2 x^2 + c1 x + c0 with c3 != 0.
std::vector<double> solve_cubic(double c3, double c2, double c1, double c0) {
  const double a = c2 / c3;
  const double b = c1 / c3;
  const double c = c0 / c3;
  const double q = (a * a - 3.0 * b) / 9.0;
  const double r = (2.0 * a * a * a - 9.0 * a * b + 27.0 * c) / 54.0;
  std::vector<double> roots;
  if (r * r < q * q * q) {
    const double theta = std::acos(std::clamp(r / std::sqrt(q * q * q), -1.0, 1.0));
    const double m = -2.0 * std::sqrt(q);
    constexpr double kTwoPi = 2.0 * std::numbers::pi;
    roots = {m * std::cos(theta / 3.0) - a / 3.0,
             m * std::cos((theta + kTwoPi) / 3.0) - a / 3.0,
             m * std::cos((theta - kTwoPi) / 3.0) - a / 3.0};
  } else {
    const double big = -std::copysign(
        std::cbrt(std::abs(r) + std::sqrt(r * r - q * q * q)), r);
    const double small = big == 0.0 ? 0.0 : q / big;
    roots = {big + small - a / 3.0};
  }
  // Newton polish on the monic cubic.
  for (double& x : roots) {
    for (int it = 0; it < 3; ++it) {
      const double f = ((x + a) * x + b) * x + c;
      const double df = (3.0 * x + 2.0 * a) * x + b;
      if (df == 0.0) break;
      const double step = f / df;
      x -= step;
      if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
    }
  }
  return roots;
}

// det(A + l B) = det A + l tr(adj(A) B) + l^2 tr(A adj(B)) + l^3 det B
std::array<double, 4> det_pencil(const Mat3& a, const Mat3& b) {
  const auto adjugate = [](const Mat3& m) {
    Mat3 adj;
    adj(0, 0) = m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1);
    adj(0, 1) = m(0, 2) * m(2, 1) - m(0, 1) * m(2, 2);
    adj(0, 2) = m(0, 1) * m(1, 2) - m(0, 2) * m(1, 1);
    adj(1, 0) = m(1, 2) * m(2, 0) - m(1, 0) * m(2, 2);
    adj(1, 1) = m(0, 0) * m(2, 2) - m(0, 2) * m(2, 0);
    adj(1, 2) = m(0, 2) * m(1, 0) - m(0, 0) * m(1, 2);
    adj(2, 0) = m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0);
    adj(2, 1) = m(0, 1) * m(2, 0) - m(0, 0) * m(2, 1);
    adj(2, 2) = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    return adj;
  };
  return {a.determinant(), (adjugate(a) * b).trace(), (a * adjugate(b)).trace(),
          b.determinant()};
}

}  // namespace

Mat3 hartley_normalization(std::span<const Vec2> points,
                           std::span<const double> weights) {
  Vec2 centroid = Vec2::Zero();
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w <= 0.0) continue;
    centroid += w * points[i];
    total += w;
  }
  if (!(total > 0.0)) return Mat3::Identity();
  centroid /= total;
  double spread = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    if (w <= 0.0) continue;
    spread += w * (points[i] - centroid).norm();
  }
  spread /= total;
  const double s = spread > 0.0 ? std::numbers::sqrt2 / spread : 1.0;
  Mat3 t;
  t << s, 0.0, -s * centroid.x(), 0.0, s, -s * centroid.y(), 0.0, 0.0, 1.0;
  return t;
}

Mat3 project_to_rank2(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vec3 s = svd.singularValues();
  s(2) = 0.0;
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

Mat3 project_to_essential(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 s = svd.singularValues();
  const double mean = 0.5 * (s(0) + s(1));
  return svd.matrixU() * Vec3(mean, mean, 0.0).asDiagonal() *
         svd.matrixV().transpose();
}

std::vector<ModelMatrix> fundamental_7pt(std::span<const Correspondence> points) {
  if (points.size() != kFundamentalSampleSize) {
    throw Error(ErrorCode::kInvalidInput, "seven-point solver needs 7 points");
  }
  std::array<Vec2, 7> x1;
  std::array<Vec2, 7> x2;
  for (std::size_t i = 0; i < 7; ++i) {
    x1[i] = points[i].p1;
    x2[i] = points[i].p2;
  }
  const Mat3 t1 = hartley_normalization(x1);
  const Mat3 t2 = hartley_normalization(x2);

  // The last two columns of Q in A^T = QR span the null space of A.
  Eigen::Matrix<double, 9, 7> at;
  for (std::size_t i = 0; i < 7; ++i) {
    at.col(i) = epipolar_row((t1 * x1[i].homogeneous()).hnormalized(),
                             (t2 * x2[i].homogeneous()).hnormalized())
                    .transpose();
  }
  const Eigen::ColPivHouseholderQR<Eigen::Matrix<double, 9, 7>> qr(at);
  const auto& r = qr.matrixR();
  if (!(std::abs(r(6, 6)) > 1e-10 * std::abs(r(0, 0)))) {
    throw Error(ErrorCode::kDegenerateSample, "seven-point design matrix has rank < 7");
  }
  const Eigen::Matrix<double, 9, 9> q = qr.householderQ();
  const Mat3 f1 = from_row_major(q.col(7));
  const Mat3 f2 = from_row_major(q.col(8));

  // Solve in whichever parametrization has the larger leading coefficient.
  std::vector<Mat3> candidates;
  const std::array<double, 4> p = det_pencil(f1, f2);  // det(F1 + l F2)
  if (std::abs(p[3]) >= std::abs(p[0])) {
    for (double l : solve_cubic(p[3], p[2], p[1], p[0])) {
      candidates.push_back(f1 + l * f2);
    }
  } else {
    // det(mu F1 + F2): coefficients reversed.
    for (double mu : solve_cubic(p[0], p[1], p[2], p[3])) {
      candidates.push_back(mu * f1 + f2);
    }
  }

  std::vector<ModelMatrix> models;
  models.reserve(candidates.size());
  for (const Mat3& f : candidates) {
    const Mat3 denorm = t2.transpose() * f * t1;
    const double norm = denorm.norm();
    if (!(norm > 0.0) || !denorm.allFinite()) continue;
    models.emplace_back(denorm / norm, ModelKind::kFundamental);
  }
  return models;
}

ModelMatrix weighted_8pt(std::span<const Correspondence> points,
                         std::span<const double> weights, ModelKind kind) {
  if (!weights.empty() && weights.size() != points.size()) {
    throw Error(ErrorCode::kInvalidInput, "weights and points differ in length");
  }
  std::vector<Vec2> x1;
  std::vector<Vec2> x2;
  std::vector<double> w;
  x1.reserve(points.size());
  x2.reserve(points.size());
  w.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double wi = weights.empty() ? 1.0 : weights[i];
    if (!(wi > 0.0) || !std::isfinite(wi)) continue;
    x1.push_back(points[i].p1);
    x2.push_back(points[i].p2);
    w.push_back(wi);
  }
  if (x1.size() < 8) {
    throw Error(ErrorCode::kInsufficientSupport,
                "weighted 8-point fit needs 8 positively weighted points");
  }
  // Unweighted over the support: IRLS row weights span many orders of
  // magnitude and would let a few points set the frame.
  const Mat3 t1 = hartley_normalization(x1);
  const Mat3 t2 = hartley_normalization(x2);

  // Normal equations A^T W A, accumulated without forming A.
  Eigen::Matrix<double, 9, 9> ata = Eigen::Matrix<double, 9, 9>::Zero();
  for (std::size_t i = 0; i < x1.size(); ++i) {
    const Row9 row = epipolar_row((t1 * x1[i].homogeneous()).hnormalized(),
                                  (t2 * x2[i].homogeneous()).hnormalized());
    ata.noalias() += w[i] * row.transpose() * row;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> eig(ata);
  if (eig.info() != Eigen::Success) {
    throw Error(ErrorCode::kDegenerateGeometry, "normal system eigen-decomposition failed");
  }
  const auto& values = eig.eigenvalues();
  const double scale = std::max(values(8), 1e-300);
  if (values(1) <= 1e-14 * scale) {
    throw Error(ErrorCode::kDegenerateGeometry,
                "weighted normal system has a multi-dimensional null space");
  }
  Mat3 f = from_row_major(eig.eigenvectors().col(0));
  f = kind == ModelKind::kEssential ? f : project_to_rank2(f);
  Mat3 m = t2.transpose() * f * t1;
  if (kind == ModelKind::kEssential) m = project_to_essential(m);
  const double norm = m.norm();
  if (!(norm > 0.0) || !m.allFinite()) {
    throw Error(ErrorCode::kDegenerateGeometry, "weighted fit produced a null model");
  }
  return ModelMatrix(m / norm, kind);
}

}  // namespace twoview
