#include "twoview/estimator.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "twoview/error.hpp"
#include "twoview/solvers.hpp"

namespace twoview {

void EstimatorConfig::validate() const {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error(ErrorCode::kInvalidInput, "confidence must lie in (0, 1)");
  }
  if (min_iterations < 1 || max_iterations < min_iterations) {
    throw Error(ErrorCode::kInvalidInput,
                "need max_iterations >= min_iterations >= 1");
  }
  if (!(sigma_max > 0.0) || !(residual_scale > 0.0)) {
    throw Error(ErrorCode::kInvalidInput, "sigma_max and residual_scale must be positive");
  }
  if (problem == ModelKind::kFundamental && fundamental_sample_size != 7 &&
      fundamental_sample_size != 8) {
    throw Error(ErrorCode::kInvalidInput, "fundamental sample size must be 7 or 8");
  }
  if (irls_iterations < 0) {
    throw Error(ErrorCode::kInvalidInput, "irls_iterations must be >= 0");
  }
}

int termination_iterations(double inlier_ratio, std::size_t sample_size,
                           double confidence, int min_iterations,
                           int max_iterations) {
  const double ratio = std::clamp(inlier_ratio, 0.0, 1.0);
  const double p_good = std::pow(ratio, static_cast<double>(sample_size));
  if (p_good >= 1.0 - 1e-12) return min_iterations;
  if (p_good <= 0.0) return max_iterations;
  const double needed = std::ceil(std::log(1.0 - confidence) / std::log1p(-p_good));
  if (!(needed < static_cast<double>(max_iterations))) return max_iterations;
  return std::clamp(static_cast<int>(needed), min_iterations, max_iterations);
}

PrefilterResult snn_prefilter(std::span<const Correspondence> correspondences,
                              double threshold) {
  PrefilterResult result;
  for (std::size_t i = 0; i < correspondences.size(); ++i) {
    const Correspondence& c = correspondences[i];
    if (!c.snn_ratio) {
      ++result.missing_ratio;
    } else if (!(*c.snn_ratio <= threshold)) {
      continue;
    }
    result.kept.push_back(c);
    result.indices.push_back(i);
  }
  return result;
}

namespace {

class Scorer {
 public:
  Scorer(std::span<const Correspondence> points, const SigmaParams& params,
         ResidualKind residual)
      : table_(params), residual_(residual),
        tau_sq_(params.tau_max() * params.tau_max()) {
    coords_.reserve(4 * points.size());
    for (const Correspondence& c : points) {
      coords_.insert(coords_.end(), {c.p1.x(), c.p1.y(), c.p2.x(), c.p2.y()});
    }
  }

  /// Quality, abandoned early (returning a value below `bound`) once the
  /// remaining points cannot lift the sum above it.
  double score(const Mat3& model, double bound) const {
    const double max_w = table_.max_weight();
    const std::size_t n = size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r2 = squared(model, i);
      if (r2 < tau_sq_) sum += table_.weight(std::sqrt(r2));
      if (((i & 63) == 63) && sum + static_cast<double>(n - i - 1) * max_w < bound) {
        return -1.0;
      }
    }
    return sum;
  }

  std::vector<std::size_t> inliers(const Mat3& model) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size(); ++i) {
      if (squared(model, i) < tau_sq_) out.push_back(i);
    }
    return out;
  }

 private:
  std::size_t size() const noexcept { return coords_.size() / 4; }

  // Inlined squared_residual over the packed coordinates.
  double squared(const Mat3& f, std::size_t i) const noexcept {
    const double* c = coords_.data() + 4 * i;
    const double x1 = c[0], y1 = c[1], x2 = c[2], y2 = c[3];
    const double a0 = f(0, 0) * x1 + f(0, 1) * y1 + f(0, 2);
    const double a1 = f(1, 0) * x1 + f(1, 1) * y1 + f(1, 2);
    const double a2 = f(2, 0) * x1 + f(2, 1) * y1 + f(2, 2);
    const double b0 = f(0, 0) * x2 + f(1, 0) * y2 + f(2, 0);
    const double b1 = f(0, 1) * x2 + f(1, 1) * y2 + f(2, 1);
    const double e = x2 * a0 + y2 * a1 + a2;
    const double e2 = e * e;
    if (e2 == 0.0) return 0.0;
    const double n1 = b0 * b0 + b1 * b1;
    const double n2 = a0 * a0 + a1 * a1;
    constexpr double kFloor = kDegenerateNormal * kDegenerateNormal;
    if (residual_ == ResidualKind::kSampson) {
      const double denom = n1 + n2;
      return denom < kFloor ? std::numeric_limits<double>::infinity() : e2 / denom;
    }
    if (n1 < kFloor || n2 < kFloor) return std::numeric_limits<double>::infinity();
    return 0.5 * e2 * (1.0 / n1 + 1.0 / n2);
  }

  std::vector<double> coords_;
  WeightTable table_;
  ResidualKind residual_;
  double tau_sq_;
};

std::vector<ModelMatrix> solve_minimal(ModelKind problem,
                                       std::span<const Correspondence> sample) {
  if (problem == ModelKind::kEssential) return essential_5pt(sample);
  if (sample.size() == 7) return fundamental_7pt(sample);
  return {weighted_8pt(sample, {}, ModelKind::kFundamental)};
}

bool passes_cheirality(const ModelMatrix& model,
                       std::span<const Correspondence> sample) {
  try {
    decompose_essential(model, sample);
    return true;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

EstimationReport estimate(std::span<const Correspondence> points,
                          std::span<const double> priors,
                          const EstimatorConfig& config,
                          const SampleObserver& observer) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t m = config.problem == ModelKind::kEssential
                            ? kEssentialSampleSize
                            : config.fundamental_sample_size;
  const std::size_t n = points.size();
  if (n < m) {
    throw Error(ErrorCode::kInsufficientPoints,
                "need at least " + std::to_string(m) + " correspondences");
  }

  const SigmaParams params(config.sigma_max / config.residual_scale, config.nu,
                           config.k);
  const ResidualKind residual = config.residual_kind();
  const Scorer scorer(points, params, residual);
  std::unique_ptr<Sampler> sampler =
      make_sampler(config.sampler, n, priors, m, config.seed, config.sampler_settings);

  IrlsOptions irls;
  irls.max_iterations = config.irls_iterations;
  irls.residual = residual;

  EstimationReport report;
  std::vector<std::size_t> indices(m);
  std::vector<Correspondence> sample(m);
  bool have_best = false;
  double best_quality = 0.0;
  std::size_t best_inliers = 0;
  int required = config.max_iterations;

  int iteration = 0;
  while (iteration < config.max_iterations) {
    ++iteration;
    sampler->sample(indices);
    if (observer) observer(iteration, indices);
    for (std::size_t i = 0; i < m; ++i) sample[i] = points[indices[i]];

    std::vector<ModelMatrix> hypotheses;
    try {
      hypotheses = solve_minimal(config.problem, sample);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateSample &&
          e.code() != ErrorCode::kDegenerateGeometry) {
        throw;
      }
      ++report.degenerate_samples;
    }

    for (const ModelMatrix& hypothesis : hypotheses) {
      ++report.hypotheses;
      if (config.cheirality_check && config.problem == ModelKind::kEssential &&
          !passes_cheirality(hypothesis, sample)) {
        continue;
      }
      const double bound = have_best ? best_quality : 0.0;
      double q = scorer.score(hypothesis.matrix(), bound);
      if (!(q > bound) || (!have_best && !(q > 0.0))) continue;

      ModelMatrix candidate = hypothesis;
      if (config.irls_iterations > 0) {
        try {
          const IrlsResult polished =
              irls_polish(hypothesis, points, params, irls);
          const double pq = scorer.score(polished.model.matrix(), q);
          if (pq > q) {
            candidate = polished.model;
            q = pq;
            ++report.accepted_polishes;
          }
        } catch (const Error&) {
          // Keep the unpolished hypothesis.
        }
      }
      report.model = candidate;
      best_quality = q;
      have_best = true;
      best_inliers = scorer.inliers(candidate.matrix()).size();
      if (!config.fixed_iterations) {
        required = termination_iterations(
            static_cast<double>(best_inliers) / static_cast<double>(n), m,
            config.confidence, config.min_iterations, config.max_iterations);
      }
    }

    if (config.record_trace) {
      report.trace.best_quality.push_back(have_best ? best_quality : 0.0);
      report.trace.inlier_count.push_back(have_best ? best_inliers : 0);
    }
    if (!config.fixed_iterations && iteration >= required) break;
  }

  if (!have_best) {
    throw Error(ErrorCode::kEstimationFailed, "no hypothesis gained support");
  }
  report.iterations = iteration;
  report.quality = quality(report.model.matrix(), points, params, residual);
  report.inliers = scorer.inliers(report.model.matrix());
  report.elapsed = std::chrono::steady_clock::now() - start;
  return report;
}

}  // namespace twoview
