#pragma once

#include <cstdint>
#include <memory>
#include <limits>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace twoview {

/// Seeded 64-bit generator with distribution helpers whose output does not
/// depend on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() noexcept {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) noexcept;
  double gaussian() noexcept;

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct BetaParams {
  double a = 1.0;
  double b = 1.0;
  double mean() const noexcept { return a / (a + b); }
  double variance() const noexcept {
    const double s = a + b;
    return a * b / (s * s * (s + 1.0));
  }
};

/// Beta parameters with mean mu0 and variance v:
///   a = mu^2 (1 - mu) / v - mu,  b = a (1 - mu) / mu.
/// Throws Error(kInvalidPrior) unless 0 < mu0 < 1 and 0 < v < mu0 (1 - mu0).
BetaParams beta_init(double mu0, double v);

struct BetaInit {
  BetaParams params;
  bool clamped = false;
};

/// beta_init with the fallback used for measured priors: mu is clamped into
/// [1e-4, 1 - 1e-4] and an infeasible v is replaced by 0.9 mu (1 - mu).
BetaInit beta_init_clamped(double mu0, double v);

/// Product of the inlier probabilities of the sample points.
double sample_probability(std::span<const double> mus);

/// mu_{i_j} = 1 - (j - 1) / (n - 1) for points ranked by ascending SNN ratio
/// (ties by index). Throws Error(kInsufficientPoints) for n < 2.
std::vector<double> rank_prior_from_snn(std::span<const double> snn_ratios);

/// Minimal-sample selection strategy.
class Sampler {
 public:
  virtual ~Sampler() = default;
  /// Fills `out` with out.size() distinct indices in [0, n).
  virtual void sample(std::span<std::size_t> out) = 0;
  virtual std::size_t size() const noexcept = 0;
  virtual std::string_view name() const noexcept = 0;
};

class UniformSampler final : public Sampler {
 public:
  UniformSampler(std::size_t n, std::uint64_t seed);
  void sample(std::span<std::size_t> out) override;
  std::size_t size() const noexcept override { return n_; }
  std::string_view name() const noexcept override { return "uniform"; }

 private:
  std::size_t n_;
  Rng rng_;
};

/// Progressive sampling: hypothesis t draws from the n_t best ranked points,
/// n_t growing from m to n over `growth_max_samples` hypotheses.
class ProsacSampler final : public Sampler {
 public:
  /// `quality` ranks the points (higher first, ties by index).
  ProsacSampler(std::span<const double> quality, std::size_t sample_size,
                std::uint64_t seed, std::size_t growth_max_samples = 200000);

  void sample(std::span<std::size_t> out) override;
  std::size_t size() const noexcept override { return order_.size(); }
  std::string_view name() const noexcept override { return "prosac"; }

  /// Hypotheses drawn so far.
  std::size_t iteration() const noexcept { return t_; }
  /// Size of the current sampling pool.
  std::size_t pool_size() const noexcept { return subset_size_; }
  /// Point indices, best ranked first.
  std::span<const std::size_t> order() const noexcept { return order_; }

 private:
  std::vector<std::size_t> order_;
  std::size_t m_;
  std::size_t growth_max_samples_;
  std::size_t t_ = 0;
  std::size_t subset_size_;
  double t_n_;
  std::size_t t_n_prime_ = 1;
  Rng rng_;
};

/// Draws without replacement, each step proportional to mu over the points
/// not yet chosen. Throws Error(kInsufficientPoints) from sample() when fewer
/// than m points have mu > 0.
class CategoricalSampler final : public Sampler {
 public:
  CategoricalSampler(std::span<const double> mu, std::uint64_t seed);
  void sample(std::span<std::size_t> out) override;
  std::size_t size() const noexcept override { return mu_.size(); }
  std::string_view name() const noexcept override { return "categorical"; }

 private:
  std::vector<double> mu_;
  std::size_t positive_;
  Rng rng_;
  std::vector<double> scratch_;
};

enum class ArUpdateRule {
  kUsageCount,  // b <- b + N_i
  kPlusOne,     // b <- b + 1
};

struct ArOptions {
  double prior_variance = 0.01;
  double epsilon_amplitude = 0.0005;  // 0 disables the shuffle
  ArUpdateRule update = ArUpdateRule::kUsageCount;
};

/// Per-point AR bookkeeping.
struct ArPointState {
  double a = 1.0;
  double b = 1.0;
  double mu = 0.5;
  std::uint64_t usage = 0;
};

struct SamplerState {
  std::vector<ArPointState> points;
  ArOptions options;
};

/// Builds the state from prior inlier probabilities through beta_init_clamped.
/// `clamped_count`, when given, receives the number of fallback inits.
SamplerState make_sampler_state(std::span<const double> priors,
                                const ArOptions& options,
                                std::size_t* clamped_count = nullptr);

/// Probability update for the points of an unsuccessful sample: b grows by
/// the usage number (or by one), a is kept, mu = a / (a + b). Points outside
/// the sample are untouched.
void ar_update(SamplerState& state, std::span<const std::size_t> sample);

/// Takes the m points with the largest mu + eps (eps uniform in
/// [-amplitude, amplitude], fresh per call; ties by index), increments their
/// usage and applies ar_update. eps is only drawn, in index order, for points
/// within 2 amplitude of the m-th largest mu; the others cannot be chosen. Throws Error(kInsufficientPoints) if n < m.
void ar_sample(SamplerState& state, Rng& rng, std::span<std::size_t> out);

/// Adaptive re-ordering sampler: always picks the current most probable
/// minimal sample, then lowers the probabilities of its points.
class ArSampler final : public Sampler {
 public:
  ArSampler(std::span<const double> priors, const ArOptions& options,
            std::uint64_t seed);
  explicit ArSampler(SamplerState state, std::uint64_t seed);

  void sample(std::span<std::size_t> out) override;
  std::size_t size() const noexcept override { return state_.points.size(); }
  std::string_view name() const noexcept override { return "ar"; }

  const SamplerState& state() const noexcept { return state_; }
  std::size_t clamped_priors() const noexcept { return clamped_; }

 private:
  SamplerState state_;
  Rng rng_;
  std::size_t clamped_ = 0;
};

enum class SamplerKind { kUniform, kProsac, kCategorical, kAr };

/// "uniform" | "prosac" | "categorical" | "ar"; throws Error(kInvalidInput).
SamplerKind parse_sampler_kind(std::string_view name);
std::string_view to_string(SamplerKind kind) noexcept;

struct SamplerSettings {
  ArOptions ar;
  std::size_t prosac_growth_max_samples = 200000;
};

/// Priors may be empty for the uniform sampler; otherwise one per point.
std::unique_ptr<Sampler> make_sampler(SamplerKind kind, std::size_t n,
                                      std::span<const double> priors,
                                      std::size_t sample_size,
                                      std::uint64_t seed,
                                      const SamplerSettings& settings = {});

}  // namespace twoview
