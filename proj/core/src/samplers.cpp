#include "twoview/samplers.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <numeric>

#include "twoview/error.hpp"

namespace twoview {

std::size_t Rng::below(std::size_t n) noexcept {
  if (n <= 1) return 0;
  // Rejection sampling on the top bits keeps the result unbiased.
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

double Rng::gaussian() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

BetaParams beta_init(double mu0, double v) {
  if (!(mu0 > 0.0 && mu0 < 1.0)) {
    throw Error(ErrorCode::kInvalidPrior, "prior mean must lie in (0, 1)");
  }
  if (!(v > 0.0) || !(v < mu0 * (1.0 - mu0))) {
    throw Error(ErrorCode::kInvalidPrior,
                "prior variance must lie in (0, mu (1 - mu))");
  }
  BetaParams p;
  p.a = mu0 * mu0 * (1.0 - mu0) / v - mu0;
  p.b = p.a * (1.0 - mu0) / mu0;
  if (!(p.a > 0.0) || !(p.b > 0.0)) {
    throw Error(ErrorCode::kInvalidPrior, "non-positive beta parameters");
  }
  return p;
}

BetaInit beta_init_clamped(double mu0, double v) {
  constexpr double kLo = 1e-4;
  constexpr double kHi = 1.0 - 1e-4;
  BetaInit out;
  double mu = mu0;
  if (!(mu >= kLo)) {
    mu = kLo;
    out.clamped = true;
  } else if (mu > kHi) {
    mu = kHi;
    out.clamped = true;
  }
  const double max_variance = mu * (1.0 - mu);
  double variance = v;
  if (!(variance > 0.0) || !(variance < max_variance)) {
    variance = 0.9 * max_variance;
    out.clamped = true;
  }
  out.params = beta_init(mu, variance);
  return out;
}

double sample_probability(std::span<const double> mus) {
  double p = 1.0;
  for (double mu : mus) p *= mu;
  return p;
}

std::vector<double> rank_prior_from_snn(std::span<const double> snn_ratios) {
  const std::size_t n = snn_ratios.size();
  if (n < 2) {
    throw Error(ErrorCode::kInsufficientPoints, "rank prior needs at least 2 points");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return snn_ratios[a] < snn_ratios[b];
  });
  std::vector<double> prior(n);
  const double denom = static_cast<double>(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    prior[order[j]] = 1.0 - static_cast<double>(j) / denom;
  }
  return prior;
}

namespace {

void check_sample_size(std::size_t n, std::size_t m) {
  if (n < m) {
    throw Error(ErrorCode::kInsufficientPoints, "fewer points than the sample size");
  }
}

// m distinct uniform draws from [0, pool) by rejection; m is tiny.
void draw_distinct(Rng& rng, std::size_t pool, std::span<std::size_t> out) {
  for (std::size_t i = 0; i < out.size(); ++i) {
    while (true) {
      const std::size_t idx = rng.below(pool);
      if (std::find(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(i), idx) ==
          out.begin() + static_cast<std::ptrdiff_t>(i)) {
        out[i] = idx;
        break;
      }
    }
  }
}

}  // namespace

UniformSampler::UniformSampler(std::size_t n, std::uint64_t seed)
    : n_(n), rng_(seed) {}

void UniformSampler::sample(std::span<std::size_t> out) {
  check_sample_size(n_, out.size());
  if (out.size() == n_) {
    std::iota(out.begin(), out.end(), 0);
    return;
  }
  draw_distinct(rng_, n_, out);
}

ProsacSampler::ProsacSampler(std::span<const double> quality,
                             std::size_t sample_size, std::uint64_t seed,
                             std::size_t growth_max_samples)
    : order_(quality.size()),
      m_(sample_size),
      growth_max_samples_(growth_max_samples),
      subset_size_(sample_size),
      rng_(seed) {
  check_sample_size(quality.size(), sample_size);
  if (sample_size == 0) {
    throw Error(ErrorCode::kInvalidInput, "sample size must be positive");
  }
  std::iota(order_.begin(), order_.end(), 0);
  std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) {
    return quality[a] > quality[b];
  });
  // T_m = T_N * prod_{i<m} (m - i) / (N - i)
  const std::size_t n = order_.size();
  t_n_ = static_cast<double>(growth_max_samples_);
  for (std::size_t i = 0; i < m_; ++i) {
    t_n_ *= static_cast<double>(m_ - i) / static_cast<double>(n - i);
  }
}

void ProsacSampler::sample(std::span<std::size_t> out) {
  const std::size_t n = order_.size();
  if (out.size() != m_) {
    throw Error(ErrorCode::kInvalidInput, "PROSAC sample size is fixed at construction");
  }
  ++t_;
  while (subset_size_ < n && t_ >= t_n_prime_) {
    const double next = t_n_ * static_cast<double>(subset_size_ + 1) /
                        static_cast<double>(subset_size_ + 1 - m_);
    t_n_prime_ += static_cast<std::size_t>(std::ceil(next - t_n_));
    t_n_ = next;
    ++subset_size_;
  }
  if (n == m_) {
    std::copy(order_.begin(), order_.end(), out.begin());
    return;
  }
  if (t_n_prime_ >= t_) {
    // m - 1 from the best n - 1, plus the n-th point.
    draw_distinct(rng_, subset_size_ - 1, out.first(m_ - 1));
    out[m_ - 1] = subset_size_ - 1;
  } else {
    draw_distinct(rng_, subset_size_, out);
  }
  for (std::size_t& idx : out) idx = order_[idx];
}

CategoricalSampler::CategoricalSampler(std::span<const double> mu,
                                       std::uint64_t seed)
    : mu_(mu.begin(), mu.end()), rng_(seed) {
  positive_ = 0;
  for (double v : mu_) {
    if (v < 0.0 || !std::isfinite(v)) {
      throw Error(ErrorCode::kInvalidInput, "categorical weights must be finite and >= 0");
    }
    if (v > 0.0) ++positive_;
  }
}

void CategoricalSampler::sample(std::span<std::size_t> out) {
  if (positive_ < out.size()) {
    throw Error(ErrorCode::kInsufficientPoints,
                "fewer points with positive probability than the sample size");
  }
  scratch_ = mu_;
  double total = std::accumulate(scratch_.begin(), scratch_.end(), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double target = rng_.uniform() * total;
    double acc = 0.0;
    std::size_t chosen = scratch_.size();
    std::size_t last_positive = scratch_.size();
    for (std::size_t i = 0; i < scratch_.size(); ++i) {
      if (scratch_[i] <= 0.0) continue;
      last_positive = i;
      acc += scratch_[i];
      if (target < acc) {
        chosen = i;
        break;
      }
    }
    // Rounding can leave target just above the running sum.
    if (chosen == scratch_.size()) chosen = last_positive;
    out[k] = chosen;
    total -= scratch_[chosen];
    scratch_[chosen] = 0.0;
    // Recompute to avoid drift when the remaining mass is tiny.
    if (total <= 0.0) total = std::accumulate(scratch_.begin(), scratch_.end(), 0.0);
  }
}

SamplerState make_sampler_state(std::span<const double> priors,
                                const ArOptions& options,
                                std::size_t* clamped_count) {
  SamplerState state;
  state.options = options;
  state.points.resize(priors.size());
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < priors.size(); ++i) {
    const BetaInit init = beta_init_clamped(priors[i], options.prior_variance);
    if (init.clamped) ++clamped;
    state.points[i] = {init.params.a, init.params.b, init.params.mean(), 0};
  }
  if (clamped_count) *clamped_count = clamped;
  return state;
}

void ar_update(SamplerState& state, std::span<const std::size_t> sample) {
  for (std::size_t idx : sample) {
    ArPointState& p = state.points.at(idx);
    p.b += state.options.update == ArUpdateRule::kUsageCount
               ? static_cast<double>(p.usage)
               : 1.0;
    p.mu = p.a / (p.a + p.b);
  }
}

void ar_sample(SamplerState& state, Rng& rng, std::span<std::size_t> out) {
  const std::size_t n = state.points.size();
  const std::size_t m = out.size();
  check_sample_size(n, m);
  const double amp = std::max(state.options.epsilon_amplitude, 0.0);

  // m-th largest mu through a size-m min-heap. A point more than 2 amp below
  // it cannot reach the top m after the shuffle, so only the rest get keys.
  std::vector<double> heap;
  heap.reserve(m);
  for (const ArPointState& p : state.points) {
    if (heap.size() < m) {
      heap.push_back(p.mu);
      std::push_heap(heap.begin(), heap.end(), std::greater<>());
    } else if (p.mu > heap.front()) {
      std::pop_heap(heap.begin(), heap.end(), std::greater<>());
      heap.back() = p.mu;
      std::push_heap(heap.begin(), heap.end(), std::greater<>());
    }
  }
  const double cutoff = heap.front() - 2.0 * amp;

  std::vector<std::size_t> order;
  std::vector<double> keys;
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = state.points[i].mu;
    if (mu < cutoff) continue;
    order.push_back(i);
    keys.push_back(amp > 0.0 ? mu + rng.uniform(-amp, amp) : mu);
  }
  std::vector<std::size_t> slot(order.size());
  std::iota(slot.begin(), slot.end(), 0);
  // Candidates are in index order, so ties on the key resolve by index.
  const auto better = [&](std::size_t a, std::size_t b) {
    return keys[a] > keys[b] || (keys[a] == keys[b] && a < b);
  };
  std::partial_sort(slot.begin(), slot.begin() + static_cast<std::ptrdiff_t>(m), slot.end(),
                    better);
  for (std::size_t j = 0; j < m; ++j) out[j] = order[slot[j]];
  for (std::size_t idx : out) ++state.points[idx].usage;
  ar_update(state, out);
}

ArSampler::ArSampler(std::span<const double> priors, const ArOptions& options,
                     std::uint64_t seed)
    : state_(make_sampler_state(priors, options, &clamped_)), rng_(seed) {}

ArSampler::ArSampler(SamplerState state, std::uint64_t seed)
    : state_(std::move(state)), rng_(seed) {}

void ArSampler::sample(std::span<std::size_t> out) { ar_sample(state_, rng_, out); }

SamplerKind parse_sampler_kind(std::string_view name) {
  if (name == "uniform") return SamplerKind::kUniform;
  if (name == "prosac") return SamplerKind::kProsac;
  if (name == "categorical") return SamplerKind::kCategorical;
  if (name == "ar") return SamplerKind::kAr;
  throw Error(ErrorCode::kInvalidInput, "unknown sampler '" + std::string(name) + "'");
}

std::string_view to_string(SamplerKind kind) noexcept {
  switch (kind) {
    case SamplerKind::kUniform: return "uniform";
    case SamplerKind::kProsac: return "prosac";
    case SamplerKind::kCategorical: return "categorical";
    case SamplerKind::kAr: return "ar";
  }
  return "unknown";
}

std::unique_ptr<Sampler> make_sampler(SamplerKind kind, std::size_t n,
                                      std::span<const double> priors,
                                      std::size_t sample_size,
                                      std::uint64_t seed,
                                      const SamplerSettings& settings) {
  if (kind == SamplerKind::kUniform) {
    return std::make_unique<UniformSampler>(n, seed);
  }
  if (priors.size() != n) {
    throw Error(ErrorCode::kInvalidInput,
                std::string(to_string(kind)) + " sampler needs one prior per point");
  }
  switch (kind) {
    case SamplerKind::kProsac:
      return std::make_unique<ProsacSampler>(priors, sample_size, seed,
                                             settings.prosac_growth_max_samples);
    case SamplerKind::kCategorical:
      return std::make_unique<CategoricalSampler>(priors, seed);
    case SamplerKind::kAr:
      return std::make_unique<ArSampler>(priors, settings.ar, seed);
    case SamplerKind::kUniform:
      break;
  }
  throw Error(ErrorCode::kInvalidInput, "unsupported sampler");
}

}  // namespace twoview
