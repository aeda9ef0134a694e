#pragma once

#include <functional>
#include <span>
#include <vector>

#include "twoview/geometry.hpp"

namespace twoview {

/// Noise-scale marginalization settings. sigma is assumed uniform on
/// (0, sigma_max); inlier residuals are chi-distributed with nu degrees of
/// freedom and truncated at k * sigma.
class SigmaParams {
 public:
  /// Throws Error(kInvalidInput) unless sigma_max > 0, nu >= 2 and k > 0.
  explicit SigmaParams(double sigma_max, int nu = 4, double k = 3.64);

  double sigma_max() const noexcept { return sigma_max_; }
  int nu() const noexcept { return nu_; }
  double k() const noexcept { return k_; }
  /// k * sigma_max; residuals beyond it have zero weight.
  double tau_max() const noexcept { return k_ * sigma_max_; }
  /// Chi density normalization 1 / (2^(nu/2) Gamma(nu/2)).
  double c_nu() const noexcept { return c_nu_; }
  /// (nu - 1) / 2, the incomplete gamma order.
  double gamma_order() const noexcept { return 0.5 * (nu_ - 1); }
  /// C(nu) 2^((nu-1)/2)
  double weight_factor() const noexcept { return weight_factor_; }
  /// Gamma((nu-1)/2, k^2/2)
  double gamma_at_threshold() const noexcept { return gamma_threshold_; }

 private:
  double sigma_max_;
  int nu_;
  double k_;
  double c_nu_;
  double weight_factor_;
  double gamma_threshold_;
};

/// Marginal inlier density of a residual:
///   (1/sigma_max) C(nu) 2^((nu-1)/2) [Gamma(a, r^2/(2 sigma_max^2)) - Gamma(a, k^2/2)]
/// for r <= k sigma_max, and 0 beyond. Throws Error(kInvalidInput) for r < 0.
double weight(double r, const SigmaParams& params);

/// The M-estimator loss rho with rho'(r) = r w(r), rho(0) = 0. Constant for
/// r >= k sigma_max.
double marginal_loss(double r, const SigmaParams& params);

/// Cubic Hermite table of weight() over [0, k sigma_max]. Built once,
/// read-only afterwards; agrees with weight() to ~1e-13 relative.
class WeightTable {
 public:
  explicit WeightTable(const SigmaParams& params, int intervals = 4096);

  const SigmaParams& params() const noexcept { return params_; }
  double weight(double r) const noexcept;
  double weight_squared(double r_squared) const noexcept;
  /// Weight at r = 0, the largest value.
  double max_weight() const noexcept { return values_.front() / params_.sigma_max(); }

 private:
  SigmaParams params_;
  double step_;
  double tau_sq_;
  std::vector<double> values_;
  std::vector<double> slopes_;
};

/// Sum of weight(D(model, p)) over the points. Larger is better.
double quality(const Mat3& model, std::span<const Correspondence> points,
               const SigmaParams& params,
               ResidualKind residual = ResidualKind::kSymmetricEpipolar);

/// Sum of marginal_loss(D(model, p)) over the points.
double total_marginal_loss(const Mat3& model,
                           std::span<const Correspondence> points,
                           const SigmaParams& params,
                           ResidualKind residual = ResidualKind::kSymmetricEpipolar);

/// Weighted least-squares fit used as the IRLS step.
using NonMinimalSolver = std::function<ModelMatrix(
    std::span<const Correspondence>, std::span<const double>, ModelKind)>;

struct IrlsOptions {
  int max_iterations = 5;
  double relative_tolerance = 1e-10;
  ResidualKind residual = ResidualKind::kSymmetricEpipolar;
};

struct IrlsResult {
  ModelMatrix model;
  /// Total marginal loss of the initial model followed by each accepted step.
  std::vector<double> loss_trace;
  int iterations = 0;
  /// The last weighted fit would have increased the loss and was discarded.
  bool rejected_step = false;
};

/// IRLS polish: theta_{i+1} = argmin sum w(D(theta_i, p)) D^2(theta, p).
/// Each step is solved as a weighted algebraic fit whose rows are scaled by
/// the current geometric normalizer, and is kept only if the total marginal
/// loss does not increase.
/// Throws Error(kInsufficientSupport) when fewer than 8 points carry weight
/// at the initial model. An empty solver selects weighted_8pt.
IrlsResult irls_polish(const ModelMatrix& initial,
                       std::span<const Correspondence> points,
                       const SigmaParams& params,
                       const IrlsOptions& options = {},
                       const NonMinimalSolver& solver = {});

}  // namespace twoview
