#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "twoview/bench/benchmark.hpp"
#include "twoview/bench/synthetic.hpp"
#include "twoview/error.hpp"

namespace {

using namespace twoview;
using namespace twoview::bench;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitEstimation = 3;

struct CommonFlags {
  std::string problem = "e";
  std::vector<std::string> samplers;
  double sigma_max = 0.75;
  double confidence = 0.99;
  int max_iters = 1000;
  int min_iters = 50;
  bool fixed_iters = false;
  std::uint64_t seed = 0;
  double snn_filter = 0.8;
  std::string prior = "snn-rank";
  bool no_timing = false;
  double gt_threshold = 1.0;
  double f1_threshold = 1.0;
  std::string report;

  BenchmarkOptions options() const {
    BenchmarkOptions o;
    o.estimator.problem = problem == "f" ? ModelKind::kFundamental : ModelKind::kEssential;
    o.estimator.sigma_max = sigma_max;
    o.estimator.confidence = confidence;
    o.estimator.max_iterations = max_iters;
    o.estimator.min_iterations = std::min(min_iters, max_iters);
    o.estimator.fixed_iterations = fixed_iters;
    o.estimator.seed = seed;
    o.snn_filter = snn_filter >= 1.0 ? std::nullopt : std::optional<double>(snn_filter);
    o.prior = parse_prior_source(prior);
    o.include_timing = !no_timing;
    o.gt_threshold = gt_threshold;
    o.est_threshold = f1_threshold;
    o.samplers.clear();
    for (const std::string& s : samplers) o.samplers.push_back(parse_sampler_kind(s));
    return o;
  }
};

void add_common(CLI::App& app, CommonFlags& flags, bool many_samplers) {
  app.add_option("--problem", flags.problem, "Model to estimate")
      ->check(CLI::IsMember({"f", "e"}))
      ->capture_default_str();
  auto* sampler = app.add_option("--sampler", flags.samplers, "Sampler name(s)")
                      ->check(CLI::IsMember({"uniform", "prosac", "categorical", "ar"}));
  if (many_samplers) {
    sampler->delimiter(',');
    flags.samplers = {"uniform", "ar"};
  } else {
    sampler->expected(1);
    flags.samplers = {"ar"};
  }
  sampler->capture_default_str();
  app.add_option("--sigma-max", flags.sigma_max, "Noise scale upper bound (px)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--confidence", flags.confidence, "Termination confidence")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app.add_option("--max-iters", flags.max_iters, "Iteration cap")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--min-iters", flags.min_iters, "Minimum iterations")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("--fixed-iters", flags.fixed_iters, "Run exactly --max-iters iterations");
  app.add_option("--seed", flags.seed, "Random seed")->capture_default_str();
  app.add_option("--snn-filter", flags.snn_filter, "SNN ratio threshold (>= 1 disables)")
      ->capture_default_str();
  app.add_option("--prior", flags.prior, "Prior source")
      ->check(CLI::IsMember({"file", "snn-rank", "uniform"}))
      ->capture_default_str();
  app.add_flag("--no-timing", flags.no_timing, "Omit timings for reproducible reports");
  app.add_option("--gt-threshold", flags.gt_threshold,
                 "Ground-truth inlier threshold for F1 and epipolar error (px)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--f1-threshold", flags.f1_threshold,
                 "Predicted inlier threshold for F1 (px)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--report", flags.report, "JSON report path (default stdout)");
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kDataError, "cannot write " + path);
  out << text;
}

int run_estimate(const CommonFlags& flags, const std::string& input,
                 const std::string& trace_path) {
  const ScenePair pair = load_scene(input);
  BenchmarkOptions options = flags.options();
  options.estimator.record_trace = !trace_path.empty();
  const PairEvaluation result = evaluate_pair(pair, options.samplers.front(), options);
  write_text(flags.report, to_json(result.record) + "\n");
  if (result.estimation && !trace_path.empty()) {
    std::ofstream out(trace_path);
    if (!out) throw Error(ErrorCode::kDataError, "cannot write " + trace_path);
    out << "iteration,best_quality,inliers\n" << std::setprecision(17);
    const EstimationTrace& trace = result.estimation->trace;
    for (std::size_t i = 0; i < trace.best_quality.size(); ++i) {
      out << i + 1 << ',' << trace.best_quality[i] << ',' << trace.inlier_count[i] << '\n';
    }
  }
  if (!result.record.ok) {
    std::cerr << "estimation failed: " << result.record.error << '\n';
    return kExitEstimation;
  }
  return kExitOk;
}

struct SynthFlags {
  std::size_t pairs = 100;
  std::size_t n = 500;
  double inlier_ratio = 0.5;
  double noise = 1.0;
  double motion = 1.0;
  std::uint64_t seed = 0;
};

void add_synth(CLI::App& app, SynthFlags& flags) {
  app.add_option("--pairs", flags.pairs, "Number of pairs")->capture_default_str();
  app.add_option("--n", flags.n, "Correspondences per pair")->capture_default_str();
  app.add_option("--inlier-ratio", flags.inlier_ratio, "Inlier fraction")
      ->capture_default_str();
  app.add_option("--noise", flags.noise, "Pixel noise sigma")->capture_default_str();
  app.add_option("--motion", flags.motion, "Relative motion magnitude")
      ->capture_default_str();
  app.add_option("--synth-seed", flags.seed, "Seed of the first pair")
      ->capture_default_str();
}

Dataset synthesize(const SynthFlags& flags) {
  Dataset dataset;
  for (std::size_t i = 0; i < flags.pairs; ++i) {
    SyntheticParams p;
    p.n = flags.n;
    p.inlier_ratio = flags.inlier_ratio;
    p.noise_px = flags.noise;
    p.motion = flags.motion;
    p.seed = flags.seed + i;
    ScenePair scene = generate_synthetic(p);
    std::ostringstream id;
    id << "pair_" << std::setw(5) << std::setfill('0') << i;
    scene.id = id.str();
    dataset.pairs.push_back(std::move(scene));
  }
  return dataset;
}

Dataset dataset_from(const std::string& dir, bool synthetic, const SynthFlags& synth) {
  if (synthetic) return synthesize(synth);
  return load_dataset(dir);
}

int run_benchmark_command(const CommonFlags& flags, const std::string& dir,
                          bool synthetic, const SynthFlags& synth, std::size_t workers) {
  const Dataset dataset = dataset_from(dir, synthetic, synth);
  for (const LoadFailure& f : dataset.failures) {
    std::cerr << "skipping " << f.id << ": " << f.message << '\n';
  }
  if (dataset.pairs.empty()) {
    std::cerr << "no usable pairs in " << dir << '\n';
    return kExitData;
  }
  BenchmarkOptions options = flags.options();
  options.workers = workers;
  const BenchmarkReport report = run_benchmark(dataset, options);
  write_text(flags.report, to_json(report));
  for (const MethodReport& m : report.methods) {
    if (m.failed < m.evaluated) return kExitOk;
  }
  std::cerr << "estimation failed on every pair\n";
  return kExitEstimation;
}

int run_synth(const SynthFlags& flags, const std::string& out) {
  const Dataset dataset = synthesize(flags);
  for (const ScenePair& scene : dataset.pairs) save_scene(out, scene);
  std::cerr << "wrote " << dataset.pairs.size() << " pairs to " << out << '\n';
  return kExitOk;
}

int run_calibrate(const CommonFlags& flags, const std::string& dir, bool synthetic,
                  const SynthFlags& synth, const std::vector<double>& grid, int cap,
                  std::size_t workers) {
  const Dataset dataset = dataset_from(dir, synthetic, synth);
  if (dataset.pairs.empty()) {
    std::cerr << "no usable pairs\n";
    return kExitData;
  }
  BenchmarkOptions options = flags.options();
  options.workers = workers;
  const VarianceFit fit = calibrate_prior_variance(dataset, options, grid, cap);
  std::ostringstream text;
  text << std::setprecision(17) << "{\n  \"variance\": " << fit.variance
       << ",\n  \"scores\": [";
  for (std::size_t i = 0; i < fit.scores.size(); ++i) {
    text << (i ? ", " : "") << "[" << fit.scores[i].first << ", " << fit.scores[i].second
         << "]";
  }
  text << "]\n}\n";
  write_text(flags.report, text.str());
  return kExitOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEstimationFailed:
    case ErrorCode::kInsufficientPoints:
    case ErrorCode::kInsufficientSupport:
      return kExitEstimation;
    default:
      return kExitData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust two-view geometry estimation with learned sampling priors"};
  app.require_subcommand(1);

  CommonFlags estimate_flags;
  std::string input;
  std::string trace;
  CLI::App* estimate = app.add_subcommand("estimate", "Estimate the model of one pair");
  add_common(*estimate, estimate_flags, false);
  estimate->add_option("input", input, "Correspondence file (<id>.corr)")
      ->required();
  estimate->add_option("--trace", trace, "Per-iteration CSV output path");

  CommonFlags bench_flags;
  std::string data_dir;
  bool synthetic = false;
  SynthFlags bench_synth;
  std::size_t workers = 0;
  CLI::App* benchmark = app.add_subcommand("benchmark", "Evaluate samplers on a dataset");
  add_common(*benchmark, bench_flags, true);
  benchmark->add_option("--data", data_dir, "Directory of .corr/.cal files");
  benchmark->add_flag("--synthetic", synthetic, "Generate the dataset in memory");
  add_synth(*benchmark, bench_synth);
  benchmark->add_option("--workers", workers, "Worker threads (0: all cores)");

  SynthFlags synth_flags;
  std::string out_dir;
  CLI::App* synth = app.add_subcommand("synth", "Write a synthetic dataset");
  add_synth(*synth, synth_flags);
  synth->add_option("--out", out_dir, "Output directory")->required();

  CommonFlags calib_flags;
  std::string calib_dir;
  bool calib_synthetic = false;
  SynthFlags calib_synth;
  std::vector<double> grid{0.001, 0.0025, 0.005, 0.01, 0.02, 0.04, 0.08};
  int cap = 50;
  std::size_t calib_workers = 0;
  CLI::App* calibrate =
      app.add_subcommand("calibrate-v", "Fit the AR sampler prior variance");
  add_common(*calibrate, calib_flags, false);
  calibrate->add_option("--data", calib_dir, "Directory of .corr/.cal files");
  calibrate->add_flag("--synthetic", calib_synthetic, "Generate the dataset in memory");
  add_synth(*calibrate, calib_synth);
  calibrate->add_option("--grid", grid, "Candidate variances")->delimiter(',');
  calibrate->add_option("--cap", cap, "Iteration cap of each trial")->capture_default_str();
  calibrate->add_option("--workers", calib_workers, "Worker threads (0: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*estimate) return run_estimate(estimate_flags, input, trace);
    if (*benchmark) {
      if (data_dir.empty() == !synthetic) {
        std::cerr << "benchmark: give exactly one of --data or --synthetic\n";
        return kExitUsage;
      }
      return run_benchmark_command(bench_flags, data_dir, synthetic, bench_synth, workers);
    }
    if (*synth) return run_synth(synth_flags, out_dir);
    if (*calibrate) {
      if (calib_dir.empty() == !calib_synthetic) {
        std::cerr << "calibrate-v: give exactly one of --data or --synthetic\n";
        return kExitUsage;
      }
      return run_calibrate(calib_flags, calib_dir, calib_synthetic, calib_synth, grid, cap,
                           calib_workers);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
