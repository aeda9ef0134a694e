#pragma once

namespace twoview {

/// Upper incomplete gamma function Gamma(a, x) = int_x^inf t^(a-1) e^-t dt,
/// non-regularized. Relative accuracy better than 1e-12 for 0 < a <= 50.
/// Throws Error(kInvalidInput) for a <= 0 or x < 0.
double upper_incomplete_gamma(double a, double x);

/// Lower incomplete gamma function gamma(a, x) = int_0^x t^(a-1) e^-t dt.
double lower_incomplete_gamma(double a, double x);

}  // namespace twoview
