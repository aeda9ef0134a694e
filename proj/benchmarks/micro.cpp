#include <benchmark/benchmark.h>

#include <vector>

#include "twoview/bench/synthetic.hpp"
#include "twoview/estimator.hpp"
#include "twoview/incomplete_gamma.hpp"
#include "twoview/sigma_consensus.hpp"
#include "twoview/solvers.hpp"

namespace {

using namespace twoview;

bench::ScenePair scene(std::size_t n, double ratio, double noise) {
  bench::SyntheticParams p;
  p.n = n;
  p.inlier_ratio = ratio;
  p.noise_px = noise;
  p.seed = 7;
  return bench::generate_synthetic(p);
}

std::vector<Correspondence> normalized(const bench::ScenePair& s) {
  std::vector<Correspondence> out;
  for (const auto& c : s.correspondences) {
    out.push_back(normalize_correspondence(c, *s.k1, *s.k2));
  }
  return out;
}

void BM_UpperGamma(benchmark::State& state) {
  double x = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(upper_incomplete_gamma(1.5, x));
    x = x > 6.0 ? 0.0 : x + 0.01;
  }
}
BENCHMARK(BM_UpperGamma);

void BM_WeightExact(benchmark::State& state) {
  const SigmaParams params(1.0);
  double r = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(weight(r, params));
    r = r > 3.6 ? 0.0 : r + 0.001;
  }
}
BENCHMARK(BM_WeightExact);

void BM_WeightTable(benchmark::State& state) {
  const WeightTable table(SigmaParams(1.0));
  double r = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(table.weight(r));
    r = r > 3.6 ? 0.0 : r + 0.001;
  }
}
BENCHMARK(BM_WeightTable);

void BM_SevenPoint(benchmark::State& state) {
  const auto s = scene(8, 1.0, 0.0);
  const std::span<const Correspondence> sample(s.correspondences.data(), 7);
  for (auto _ : state) benchmark::DoNotOptimize(fundamental_7pt(sample));
}
BENCHMARK(BM_SevenPoint);

void BM_FivePoint(benchmark::State& state) {
  const auto pts = normalized(scene(8, 1.0, 0.0));
  const std::span<const Correspondence> sample(pts.data(), 5);
  for (auto _ : state) benchmark::DoNotOptimize(essential_5pt(sample));
}
BENCHMARK(BM_FivePoint);

void BM_IrlsPolish(benchmark::State& state) {
  const auto s = scene(static_cast<std::size_t>(state.range(0)), 0.7, 1.0);
  const SigmaParams params(1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(irls_polish(*s.gt_model, s.correspondences, params));
  }
}
BENCHMARK(BM_IrlsPolish)->Arg(500)->Arg(2000);

void BM_EstimateFundamental(benchmark::State& state) {
  const auto s = scene(2000, 0.5, 1.0);
  EstimatorConfig config;
  config.problem = ModelKind::kFundamental;
  config.sampler = SamplerKind::kUniform;
  config.sigma_max = 1.0;
  config.fixed_iterations = true;
  config.max_iterations = 1000;
  for (auto _ : state) benchmark::DoNotOptimize(estimate(s.correspondences, {}, config));
  state.SetLabel("1000 iterations, 2000 points");
}
BENCHMARK(BM_EstimateFundamental)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
