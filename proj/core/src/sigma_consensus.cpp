#include "twoview/sigma_consensus.hpp"

#include <algorithm>
#include <cmath>

#include "twoview/error.hpp"
#include "twoview/incomplete_gamma.hpp"
#include "twoview/solvers.hpp"

namespace twoview {

SigmaParams::SigmaParams(double sigma_max, int nu, double k)
    : sigma_max_(sigma_max), nu_(nu), k_(k) {
  if (!(sigma_max > 0.0) || !std::isfinite(sigma_max)) {
    throw Error(ErrorCode::kInvalidInput, "sigma_max must be positive");
  }
  if (nu < 2) {
    throw Error(ErrorCode::kInvalidInput, "nu must be at least 2");
  }
  if (!(k > 0.0) || !std::isfinite(k)) {
    throw Error(ErrorCode::kInvalidInput, "k must be positive");
  }
  const double half_nu = 0.5 * nu;
  c_nu_ = 1.0 / (std::pow(2.0, half_nu) * std::tgamma(half_nu));
  weight_factor_ = c_nu_ * std::pow(2.0, 0.5 * (nu - 1));
  gamma_threshold_ = upper_incomplete_gamma(gamma_order(), 0.5 * k * k);
}

double weight(double r, const SigmaParams& params) {
  if (!(r >= 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "residual must be non-negative");
  }
  if (r >= params.tau_max()) return 0.0;
  const double s = params.sigma_max();
  const double u = r * r / (2.0 * s * s);
  const double diff =
      upper_incomplete_gamma(params.gamma_order(), u) - params.gamma_at_threshold();
  return std::max(0.0, params.weight_factor() * diff / s);
}

double marginal_loss(double r, const SigmaParams& params) {
  if (!(r >= 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "residual must be non-negative");
  }
  const double s = params.sigma_max();
  const double a = params.gamma_order();
  const double threshold_u = 0.5 * params.k() * params.k();
  const double u = std::min(r * r / (2.0 * s * s), threshold_u);
  const double inner = u * upper_incomplete_gamma(a, u) +
                       lower_incomplete_gamma(a + 1.0, u) -
                       u * params.gamma_at_threshold();
  return params.weight_factor() * s * inner;
}

WeightTable::WeightTable(const SigmaParams& params, int intervals)
    : params_(params) {
  if (intervals < 2) {
    throw Error(ErrorCode::kInvalidInput, "weight table needs >= 2 intervals");
  }
  const double k = params.k();
  const double a = params.gamma_order();
  step_ = k / intervals;
  tau_sq_ = params.tau_max() * params.tau_max();
  values_.resize(intervals + 1);
  slopes_.resize(intervals + 1);
  // Values and derivatives of sigma_max * w(t sigma_max) in t = r / sigma_max.
  for (int i = 0; i <= intervals; ++i) {
    const double t = std::min(i * step_, k);
    const double u = 0.5 * t * t;
    values_[i] = std::max(0.0, params.weight_factor() *
                                   (upper_incomplete_gamma(a, u) -
                                    params.gamma_at_threshold()));
    // d/dt Gamma(a, t^2/2) = -(t^2/2)^(a-1) e^(-t^2/2) t = -2^(1-a) t^(2a-1) e^(-u)
    slopes_[i] = -params.weight_factor() * std::pow(2.0, 1.0 - a) *
                 std::pow(t, 2.0 * a - 1.0) * std::exp(-u);
  }
  values_.back() = 0.0;
}

double WeightTable::weight(double r) const noexcept {
  const double t = r / params_.sigma_max();
  if (!(t < params_.k()) || t < 0.0) return 0.0;
  const double pos = t / step_;
  const auto i = std::min(static_cast<std::size_t>(pos), values_.size() - 2);
  const double x = pos - static_cast<double>(i);
  const double x2 = x * x;
  const double x3 = x2 * x;
  const double h00 = 2.0 * x3 - 3.0 * x2 + 1.0;
  const double h10 = x3 - 2.0 * x2 + x;
  const double h01 = -2.0 * x3 + 3.0 * x2;
  const double h11 = x3 - x2;
  const double v = h00 * values_[i] + h10 * step_ * slopes_[i] +
                   h01 * values_[i + 1] + h11 * step_ * slopes_[i + 1];
  return std::max(0.0, v) / params_.sigma_max();
}

double WeightTable::weight_squared(double r_squared) const noexcept {
  if (!(r_squared < tau_sq_)) return 0.0;
  return weight(std::sqrt(r_squared));
}

double quality(const Mat3& model, std::span<const Correspondence> points,
               const SigmaParams& params, ResidualKind residual) {
  const double tau_sq = params.tau_max() * params.tau_max();
  double sum = 0.0;
  for (const Correspondence& c : points) {
    const double r2 = squared_residual(residual, model, c.p1, c.p2);
    if (r2 < tau_sq) sum += weight(std::sqrt(r2), params);
  }
  return sum;
}

double total_marginal_loss(const Mat3& model,
                           std::span<const Correspondence> points,
                           const SigmaParams& params, ResidualKind residual) {
  const double saturated = marginal_loss(params.tau_max(), params);
  const double tau_sq = params.tau_max() * params.tau_max();
  double sum = 0.0;
  for (const Correspondence& c : points) {
    const double r2 = squared_residual(residual, model, c.p1, c.p2);
    sum += r2 < tau_sq ? marginal_loss(std::sqrt(r2), params) : saturated;
  }
  return sum;
}

namespace {

// D^2 / e^2 at the current model, i.e. the factor turning squared algebraic
// error into the squared geometric residual.
double geometric_normalizer(ResidualKind kind, const Mat3& f,
                            const Correspondence& c) {
  const double n1 = (f.transpose() * c.p2.homogeneous()).head<2>().squaredNorm();
  const double n2 = (f * c.p1.homogeneous()).head<2>().squaredNorm();
  constexpr double kFloor = kDegenerateNormal * kDegenerateNormal;
  if (kind == ResidualKind::kSampson) {
    return 1.0 / std::max(n1 + n2, kFloor);
  }
  return 0.5 * (1.0 / std::max(n1, kFloor) + 1.0 / std::max(n2, kFloor));
}

ModelMatrix reproject(const Mat3& m, ModelKind kind) {
  return ModelMatrix::normalized(
      kind == ModelKind::kEssential ? project_to_essential(m) : project_to_rank2(m), kind);
}

}  // namespace

IrlsResult irls_polish(const ModelMatrix& initial,
                       std::span<const Correspondence> points,
                       const SigmaParams& params, const IrlsOptions& options,
                       const NonMinimalSolver& solver) {
  const NonMinimalSolver fit =
      solver ? solver
             : NonMinimalSolver([](std::span<const Correspondence> pts,
                                   std::span<const double> w, ModelKind kind) {
                 return weighted_8pt(pts, w, kind);
               });
  const double tau_sq = params.tau_max() * params.tau_max();
  constexpr int kRenormalizations = 3;
  constexpr int kBacktracks = 6;

  IrlsResult result;
  result.model = initial;
  double current_loss =
      total_marginal_loss(initial.matrix(), points, params, options.residual);
  result.loss_trace.push_back(current_loss);

  std::vector<double> weights(points.size());
  std::vector<double> row_weights(points.size());
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Mat3 f = result.model.matrix();
    std::size_t support = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double r2 = squared_residual(options.residual, f, points[i].p1, points[i].p2);
      weights[i] = r2 < tau_sq ? weight(std::sqrt(r2), params) : 0.0;
      if (weights[i] > 0.0) ++support;
    }
    if (support < 8) {
      if (iter == 0) {
        throw Error(ErrorCode::kInsufficientSupport,
                    "fewer than 8 points with nonzero weight");
      }
      break;
    }

    // Weighted algebraic fits approximating argmin sum w D^2, with the row
    // normalizers refreshed at each improving inner iterate.
    ModelMatrix candidate = result.model;
    double candidate_loss = current_loss;
    Mat3 anchor = f;
    Mat3 direction = Mat3::Zero();
    bool fitted = false;
    for (int inner = 0; inner < kRenormalizations; ++inner) {
      for (std::size_t i = 0; i < points.size(); ++i) {
        row_weights[i] = weights[i] > 0.0
                             ? weights[i] * geometric_normalizer(options.residual, anchor, points[i])
                             : 0.0;
      }
      ModelMatrix step;
      try {
        step = fit(points, row_weights, initial.kind());
      } catch (const Error&) {
        if (iter == 0 && inner == 0) throw;
        break;
      }
      if (!fitted) direction = step.matrix();
      fitted = true;
      const double loss = total_marginal_loss(step.matrix(), points, params, options.residual);
      if (!(loss < candidate_loss)) break;
      candidate = step;
      candidate_loss = loss;
      anchor = step.matrix();
    }
    if (!fitted) break;

    // No fit lowered the loss: search along the segment towards the first one.
    if (!(candidate_loss < current_loss)) {
      if ((direction.array() * f.array()).sum() < 0.0) direction = -direction;
      double t = 0.5;
      for (int b = 0; b < kBacktracks; ++b, t *= 0.5) {
        const ModelMatrix trial = reproject((1.0 - t) * f + t * direction, initial.kind());
        const double loss = total_marginal_loss(trial.matrix(), points, params, options.residual);
        if (loss < candidate_loss) {
          candidate = trial;
          candidate_loss = loss;
          break;
        }
      }
    }
    if (!(candidate_loss < current_loss)) {
      result.rejected_step = true;
      break;
    }
    const double decrease = current_loss - candidate_loss;
    result.model = candidate;
    result.loss_trace.push_back(candidate_loss);
    result.iterations = iter + 1;
    current_loss = candidate_loss;
    if (decrease <= options.relative_tolerance * std::max(current_loss, 1e-300)) {
      break;
    }
  }
  return result;
}

}  // namespace twoview
