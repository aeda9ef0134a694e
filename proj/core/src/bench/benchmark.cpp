#include "twoview/bench/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "twoview/error.hpp"
#include "twoview/samplers.hpp"
#include "twoview/solvers.hpp"

namespace twoview::bench {

PriorSource parse_prior_source(std::string_view name) {
  if (name == "file") return PriorSource::kFile;
  if (name == "snn-rank") return PriorSource::kSnnRank;
  if (name == "uniform") return PriorSource::kUniform;
  throw Error(ErrorCode::kInvalidInput, "unknown prior source '" + std::string(name) + "'");
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<double> compute_priors(std::span<const Correspondence> points,
                                   PriorSource source) {
  std::vector<double> priors;
  priors.reserve(points.size());
  switch (source) {
    case PriorSource::kFile:
      for (const Correspondence& c : points) {
        if (!c.prior) throw Error(ErrorCode::kDataError, "missing prior column");
        priors.push_back(*c.prior);
      }
      break;
    case PriorSource::kSnnRank: {
      std::vector<double> ratios;
      ratios.reserve(points.size());
      for (const Correspondence& c : points) ratios.push_back(c.snn_ratio.value_or(1.0));
      priors = rank_prior_from_snn(ratios);
      break;
    }
    case PriorSource::kUniform:
      priors.assign(points.size(), 0.5);
      break;
  }
  return priors;
}

std::vector<double> row_major(const Mat3& m) {
  std::vector<double> v;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) v.push_back(m(r, c));
  }
  return v;
}

}  // namespace

PairEvaluation evaluate_pair(const ScenePair& pair, SamplerKind sampler,
                             const BenchmarkOptions& options) {
  const auto start = Clock::now();
  PairEvaluation out;
  PairRecord& record = out.record;
  record.id = pair.id;
  const bool essential = options.estimator.problem == ModelKind::kEssential;
  const bool has_pose = pair.gt_pose.has_value() && pair.calibrated();
  if (has_pose) record.pose_error_deg = 180.0;

  try {
    std::vector<Correspondence> input;
    if (options.snn_filter) {
      PrefilterResult filtered = snn_prefilter(pair.correspondences, *options.snn_filter);
      input = std::move(filtered.kept);
      out.kept = std::move(filtered.indices);
    } else {
      input = pair.correspondences;
      out.kept.resize(input.size());
      for (std::size_t i = 0; i < input.size(); ++i) out.kept[i] = i;
    }
    const std::vector<double> priors = compute_priors(input, options.prior);

    EstimatorConfig config = options.estimator;
    config.sampler = sampler;
    std::vector<Correspondence> normalized;
    if (essential || pair.calibrated()) {
      if (!pair.calibrated()) {
        throw Error(ErrorCode::kDataError, "essential estimation needs intrinsics");
      }
      normalized.reserve(input.size());
      for (const Correspondence& c : input) {
        normalized.push_back(normalize_correspondence(c, *pair.k1, *pair.k2));
      }
    }
    if (essential) config.residual_scale = 0.5 * (pair.k1->focal() + pair.k2->focal());

    const auto estimation_start = Clock::now();
    EstimationReport est = estimate(essential ? normalized : input, priors, config);
    if (options.include_timing) record.estimation_ms = ms_since(estimation_start);

    record.ok = true;
    record.iterations = est.iterations;
    record.quality = est.quality;
    record.inliers = est.inliers.size();
    record.model = row_major(est.model.matrix());

    Mat3 f_pixels = est.model.matrix();
    if (essential) {
      f_pixels = fundamental_from_essential(est.model.matrix(), *pair.k1, *pair.k2);
    }
    if (has_pose) {
      Mat3 e = essential ? est.model.matrix()
                         : project_to_essential(essential_from_fundamental(
                               est.model.matrix(), *pair.k1, *pair.k2));
      std::vector<Correspondence> support;
      for (std::size_t i : est.inliers) support.push_back(normalized[i]);
      try {
        const Pose pose = decompose_essential(
            ModelMatrix::normalized(e, ModelKind::kEssential), support);
        record.pose_error_deg = pose_error_deg(pose, *pair.gt_pose, options.pose_error);
      } catch (const Error&) {
        // No cheirality-consistent pose: keep the failure value.
      }
    }
    if (const std::optional<Mat3> gt = pair.gt_fundamental()) {
      try {
        record.f1 = f1_score(f_pixels, *gt, pair.correspondences, options.gt_threshold,
                             options.est_threshold);
        record.median_epi_err = median_epipolar_error(f_pixels, *gt, pair.correspondences,
                                                      options.gt_threshold);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kUndefinedMetric) throw;
      }
    }
    out.estimation = std::move(est);
  } catch (const std::exception& e) {
    record.ok = false;
    record.error = e.what();
    out.estimation.reset();
  }
  if (options.include_timing) record.total_ms = ms_since(start);
  return out;
}

namespace {

MethodReport aggregate(SamplerKind sampler, const BenchmarkOptions& options,
                       std::vector<PairRecord> records) {
  std::sort(records.begin(), records.end(),
            [](const PairRecord& a, const PairRecord& b) { return a.id < b.id; });
  MethodReport m;
  m.sampler = std::string(to_string(sampler));
  m.problem = options.estimator.problem == ModelKind::kEssential ? "e" : "f";
  m.evaluated = records.size();

  std::vector<double> pose_errors;
  std::vector<double> f1s;
  std::vector<double> medians;
  double inliers = 0.0;
  double runtime = 0.0;
  std::size_t timed = 0;
  for (const PairRecord& r : records) {
    if (!r.ok) ++m.failed;
    if (r.pose_error_deg) pose_errors.push_back(*r.pose_error_deg);
    if (r.f1) f1s.push_back(*r.f1);
    if (r.median_epi_err) medians.push_back(*r.median_epi_err);
    inliers += static_cast<double>(r.inliers);
    if (r.estimation_ms) {
      runtime += *r.estimation_ms;
      ++timed;
    }
  }
  if (!records.empty()) m.mean_inliers = inliers / static_cast<double>(records.size());
  if (!pose_errors.empty()) {
    for (int t : options.auc_thresholds) {
      m.metrics.auc_at[t] = auc_pose(pose_errors, static_cast<double>(t));
    }
    m.median_pose_error_deg = median(pose_errors);
  }
  if (!f1s.empty()) {
    double sum = 0.0;
    for (double f : f1s) sum += f;
    m.metrics.f1 = sum / static_cast<double>(f1s.size());
  }
  if (!medians.empty()) m.metrics.median_epi_err = median(medians);
  if (timed > 0) m.metrics.mean_runtime_ms = runtime / static_cast<double>(timed);
  m.pairs = std::move(records);
  return m;
}

/// Runs job(i) for i in [0, count) on up to `workers` threads.
template <typename Job>
void parallel_for(std::size_t count, std::size_t workers, const Job& job) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) job(i);
    });
  }
}

}  // namespace

BenchmarkReport run_benchmark(const Dataset& dataset,
                              const BenchmarkOptions& options) {
  const std::size_t pairs = dataset.pairs.size();
  const std::size_t methods = options.samplers.size();
  std::vector<PairRecord> records(pairs * methods);
  parallel_for(records.size(), options.workers, [&](std::size_t job) {
    const std::size_t method = job / pairs;
    const std::size_t pair = job % pairs;
    records[job] =
        evaluate_pair(dataset.pairs[pair], options.samplers[method], options).record;
  });

  BenchmarkReport report;
  for (std::size_t method = 0; method < methods; ++method) {
    std::vector<PairRecord> slice(
        records.begin() + static_cast<std::ptrdiff_t>(method * pairs),
        records.begin() + static_cast<std::ptrdiff_t>((method + 1) * pairs));
    report.methods.push_back(aggregate(options.samplers[method], options, std::move(slice)));
  }
  report.dropped = dataset.failures;
  std::sort(report.dropped.begin(), report.dropped.end(),
            [](const LoadFailure& a, const LoadFailure& b) { return a.id < b.id; });
  return report;
}

VarianceFit calibrate_prior_variance(const Dataset& dataset,
                                     const BenchmarkOptions& options,
                                     std::span<const double> grid,
                                     int iteration_cap) {
  if (grid.empty()) throw Error(ErrorCode::kInvalidInput, "empty variance grid");
  if (dataset.pairs.empty()) throw Error(ErrorCode::kInvalidInput, "empty dataset");
  if (iteration_cap < 1) throw Error(ErrorCode::kInvalidInput, "iteration cap must be >= 1");

  BenchmarkOptions trial = options;
  trial.samplers = {SamplerKind::kAr};
  trial.include_timing = false;
  trial.estimator.fixed_iterations = true;
  trial.estimator.max_iterations = iteration_cap;
  trial.estimator.min_iterations = std::min(trial.estimator.min_iterations, iteration_cap);

  VarianceFit fit;
  double best = -1.0;
  for (double v : grid) {
    trial.estimator.sampler_settings.ar.prior_variance = v;
    const BenchmarkReport report = run_benchmark(dataset, trial);
    const double score = report.methods.front().mean_inliers;
    fit.scores.emplace_back(v, score);
    if (score > best || (score == best && v < fit.variance)) {
      best = score;
      fit.variance = v;
    }
  }
  return fit;
}

}  // namespace twoview::bench
