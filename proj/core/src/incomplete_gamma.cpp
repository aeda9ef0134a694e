#include "twoview/incomplete_gamma.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "twoview/error.hpp"

namespace twoview {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxClosedFormOrder = 40;
constexpr int kMaxTerms = 1000;

void check_domain(double a, double x) {
  if (!(a > 0.0) || !(x >= 0.0) || !std::isfinite(a)) {
    throw Error(ErrorCode::kInvalidInput,
                "incomplete gamma needs a > 0 and x >= 0");
  }
}

// x^a e^-x, evaluated in log space.
double power_exp(double a, double x) {
  return std::exp(a * std::log(x) - x);
}

bool is_integer(double v) { return v == std::floor(v); }

// Gamma(n, x) = (n-1)! e^-x sum_{k<n} x^k / k!
double upper_integer(int n, double x) {
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < n; ++k) {
    term *= x / k;
    sum += term;
  }
  return std::tgamma(static_cast<double>(n)) * std::exp(-x) * sum;
}

// Gamma(1/2, x) = sqrt(pi) erfc(sqrt(x)), then Gamma(s+1, x) = s Gamma(s, x) + x^s e^-x.
double upper_half_integer(int n, double x) {
  const double root = std::sqrt(x);
  double value = std::sqrt(std::numbers::pi) * std::erfc(root);
  double s = 0.5;
  for (int k = 0; k < n; ++k) {
    value = s * value + power_exp(s, x);
    s += 1.0;
  }
  return value;
}

// gamma(a, x) via its power series; converges quickly for x < a + 1.
double lower_series(double a, double x) {
  double ap = a;
  double term = 1.0 / a;
  double sum = term;
  for (int n = 0; n < kMaxTerms; ++n) {
    ap += 1.0;
    term *= x / ap;
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * power_exp(a, x);
}

// Gamma(a, x) via the modified Lentz continued fraction; for x >= a + 1.
double upper_continued_fraction(double a, double x) {
  constexpr double kTiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxTerms; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return power_exp(a, x) * h;
}

}  // namespace

double upper_incomplete_gamma(double a, double x) {
  check_domain(a, x);
  if (x == 0.0) return std::tgamma(a);
  if (std::isinf(x)) return 0.0;
  if (a <= kMaxClosedFormOrder) {
    if (is_integer(a)) return upper_integer(static_cast<int>(a), x);
    if (is_integer(a - 0.5)) {
      return upper_half_integer(static_cast<int>(a - 0.5), x);
    }
  }
  if (x < a + 1.0) return std::tgamma(a) - lower_series(a, x);
  return upper_continued_fraction(a, x);
}

double lower_incomplete_gamma(double a, double x) {
  check_domain(a, x);
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return lower_series(a, x);
  return std::tgamma(a) - upper_incomplete_gamma(a, x);
}

}  // namespace twoview
