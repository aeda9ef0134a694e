// Five-point relative pose: E = x X + y Y + z Z + W over the null space of
// the epipolar constraints, with det(E) = 0 and 2 E E^T E - tr(E E^T) E = 0
// giving 10 cubics in (x, y, z). Gauss-Jordan elimination on the 10 x 20
// coefficient matrix yields the action matrix of multiplication by x on the
// quotient basis {x^2, xy, y^2, xz, yz, z^2, x, y, z, 1}.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <array>
#include <cmath>

#include "twoview/error.hpp"
#include "twoview/solvers.hpp"

namespace twoview {
namespace {

constexpr int kMonomials = 20;

struct Exponents {
  int x, y, z;
};

// Graded order; cubic leading monomials first, quotient basis last.
constexpr std::array<Exponents, kMonomials> kOrder = {{
    {3, 0, 0}, {2, 1, 0}, {1, 2, 0}, {0, 3, 0}, {2, 0, 1},
    {1, 1, 1}, {0, 2, 1}, {1, 0, 2}, {0, 1, 2}, {0, 0, 3},
    {2, 0, 0}, {1, 1, 0}, {0, 2, 0}, {1, 0, 1}, {0, 1, 1},
    {0, 0, 2}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0, 0},
}};

constexpr int monomial_index(int x, int y, int z) {
  for (int i = 0; i < kMonomials; ++i) {
    if (kOrder[i].x == x && kOrder[i].y == y && kOrder[i].z == z) return i;
  }
  return -1;
}

// Polynomial of total degree <= 3 in (x, y, z).
struct Poly {
  std::array<double, kMonomials> c{};

  Poly operator+(const Poly& o) const {
    Poly r;
    for (int i = 0; i < kMonomials; ++i) r.c[i] = c[i] + o.c[i];
    return r;
  }
  Poly operator-(const Poly& o) const {
    Poly r;
    for (int i = 0; i < kMonomials; ++i) r.c[i] = c[i] - o.c[i];
    return r;
  }
  Poly operator*(double s) const {
    Poly r;
    for (int i = 0; i < kMonomials; ++i) r.c[i] = c[i] * s;
    return r;
  }
  Poly operator*(const Poly& o) const {
    Poly r;
    for (int i = 0; i < kMonomials; ++i) {
      if (c[i] == 0.0) continue;
      for (int j = 0; j < kMonomials; ++j) {
        if (o.c[j] == 0.0) continue;
        const int idx = monomial_index(kOrder[i].x + kOrder[j].x,
                                       kOrder[i].y + kOrder[j].y,
                                       kOrder[i].z + kOrder[j].z);
        // Inputs are arranged so products never exceed degree 3.
        if (idx >= 0) r.c[idx] += c[i] * o.c[j];
      }
    }
    return r;
  }
};

using PolyMat = std::array<std::array<Poly, 3>, 3>;

PolyMat multiply(const PolyMat& a, const PolyMat& b) {
  PolyMat r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
    }
  }
  return r;
}

PolyMat transpose(const PolyMat& a) {
  PolyMat r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) r[i][j] = a[j][i];
  }
  return r;
}

using Coefficients = Eigen::Matrix<double, 10, kMonomials>;

Coefficients constraint_matrix(const Mat3& X, const Mat3& Y, const Mat3& Z,
                               const Mat3& W) {
  constexpr int ix = monomial_index(1, 0, 0);
  constexpr int iy = monomial_index(0, 1, 0);
  constexpr int iz = monomial_index(0, 0, 1);
  constexpr int i1 = monomial_index(0, 0, 0);
  PolyMat e;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      e[i][j].c[ix] = X(i, j);
      e[i][j].c[iy] = Y(i, j);
      e[i][j].c[iz] = Z(i, j);
      e[i][j].c[i1] = W(i, j);
    }
  }
  const PolyMat eet = multiply(e, transpose(e));
  const PolyMat eete = multiply(eet, e);
  const Poly trace = eet[0][0] + eet[1][1] + eet[2][2];

  Coefficients m;
  const Poly det = e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1]) -
                   e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0]) +
                   e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0]);
  for (int k = 0; k < kMonomials; ++k) m(0, k) = det.c[k];
  int row = 1;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j, ++row) {
      const Poly p = eete[i][j] * 2.0 - trace * e[i][j];
      for (int k = 0; k < kMonomials; ++k) m(row, k) = p.c[k];
    }
  }
  return m;
}

using Vec10 = Eigen::Matrix<double, 10, 1>;

void evaluate(const Coefficients& m, const Vec3& v, Vec10& value,
              Eigen::Matrix<double, 10, 3>& jacobian) {
  value.setZero();
  jacobian.setZero();
  for (int k = 0; k < kMonomials; ++k) {
    const auto [ex, ey, ez] = kOrder[k];
    const double px = std::pow(v.x(), ex);
    const double py = std::pow(v.y(), ey);
    const double pz = std::pow(v.z(), ez);
    const double mono = px * py * pz;
    const double dx = ex > 0 ? ex * std::pow(v.x(), ex - 1) * py * pz : 0.0;
    const double dy = ey > 0 ? ey * px * std::pow(v.y(), ey - 1) * pz : 0.0;
    const double dz = ez > 0 ? ez * px * py * std::pow(v.z(), ez - 1) : 0.0;
    value += m.col(k) * mono;
    jacobian.col(0) += m.col(k) * dx;
    jacobian.col(1) += m.col(k) * dy;
    jacobian.col(2) += m.col(k) * dz;
  }
}

// Gauss-Newton on the overdetermined cubic system; keeps only improvements.
Vec3 polish_root(const Coefficients& m, Vec3 v) {
  Vec10 value;
  Eigen::Matrix<double, 10, 3> jacobian;
  evaluate(m, v, value, jacobian);
  double best = value.squaredNorm();
  for (int it = 0; it < 4 && best > 0.0; ++it) {
    const Vec3 step = jacobian.colPivHouseholderQr().solve(-value);
    if (!step.allFinite()) break;
    const Vec3 trial = v + step;
    Vec10 trial_value;
    Eigen::Matrix<double, 10, 3> trial_jacobian;
    evaluate(m, trial, trial_value, trial_jacobian);
    const double norm = trial_value.squaredNorm();
    if (!(norm < best)) break;
    v = trial;
    value = trial_value;
    jacobian = trial_jacobian;
    best = norm;
  }
  return v;
}

}  // namespace

std::vector<ModelMatrix> essential_5pt(std::span<const Correspondence> points) {
  if (points.size() != kEssentialSampleSize) {
    throw Error(ErrorCode::kInvalidInput, "five-point solver needs 5 points");
  }
  Eigen::Matrix<double, 9, 9> a = Eigen::Matrix<double, 9, 9>::Zero();
  for (std::size_t i = 0; i < 5; ++i) {
    const Vec2& x1 = points[i].p1;
    const Vec2& x2 = points[i].p2;
    a.row(i) << x2.x() * x1.x(), x2.x() * x1.y(), x2.x(), x2.y() * x1.x(),
        x2.y() * x1.y(), x2.y(), x1.x(), x1.y(), 1.0;
  }
  Eigen::JacobiSVD<Eigen::Matrix<double, 9, 9>> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  if (!(s(4) > 1e-10 * s(0))) {
    throw Error(ErrorCode::kDegenerateSample,
                "five-point constraints have rank < 5");
  }
  const auto basis = [&](int col) {
    const auto v = svd.matrixV().col(col);
    Mat3 m;
    m << v(0), v(1), v(2), v(3), v(4), v(5), v(6), v(7), v(8);
    return m;
  };
  const Mat3 X = basis(5);
  const Mat3 Y = basis(6);
  const Mat3 Z = basis(7);
  const Mat3 W = basis(8);

  const Coefficients m = constraint_matrix(X, Y, Z, W);
  const Eigen::Matrix<double, 10, 10> lead = m.leftCols<10>();
  Eigen::FullPivLU<Eigen::Matrix<double, 10, 10>> lu(lead);
  if (!lu.isInvertible() || lu.rcond() < 1e-14) {
    throw Error(ErrorCode::kDegenerateSample,
                "five-point elimination template is singular");
  }
  const Eigen::Matrix<double, 10, 10> b = lu.solve(m.rightCols<10>());

  // Rows of the action matrix of x on the basis, see the file comment.
  Eigen::Matrix<double, 10, 10> action = Eigen::Matrix<double, 10, 10>::Zero();
  constexpr std::array<int, 6> kCubicRows = {
      monomial_index(3, 0, 0), monomial_index(2, 1, 0), monomial_index(1, 2, 0),
      monomial_index(2, 0, 1), monomial_index(1, 1, 1), monomial_index(1, 0, 2)};
  for (int i = 0; i < 6; ++i) action.row(i) = -b.row(kCubicRows[i]);
  // x * {x, y, z, 1} = {x^2, xy, xz, x}, positions in the basis.
  action(6, 0) = 1.0;
  action(7, 1) = 1.0;
  action(8, 3) = 1.0;
  action(9, 6) = 1.0;

  Eigen::EigenSolver<Eigen::Matrix<double, 10, 10>> eig(action);
  if (eig.info() != Eigen::Success) return {};

  std::vector<ModelMatrix> models;
  models.reserve(10);
  const auto& values = eig.eigenvalues();
  const auto& vectors = eig.eigenvectors();
  for (int i = 0; i < 10; ++i) {
    if (std::abs(values(i).imag()) > 1e-8 * std::max(1.0, std::abs(values(i).real()))) {
      continue;
    }
    const auto v = vectors.col(i).real();
    if (std::abs(v(9)) < 1e-300) continue;
    Vec3 xyz(v(6) / v(9), v(7) / v(9), v(8) / v(9));
    if (!xyz.allFinite()) continue;
    xyz = polish_root(m, xyz);
    const Mat3 e = xyz.x() * X + xyz.y() * Y + xyz.z() * Z + W;
    const double norm = e.norm();
    if (!(norm > 0.0) || !e.allFinite()) continue;
    models.emplace_back(e / norm, ModelKind::kEssential);
  }
  return models;
}

}  // namespace twoview
