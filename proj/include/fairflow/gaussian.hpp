#pragma once

#include <cmath>

namespace fairflow {

inline double normal_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

/// Standard Gaussian CDF via the complementary error function.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

/// log Phi(x), stable for arbitrarily negative x (asymptotic expansion once
/// erfc would underflow).
inline double log_normal_cdf(double x) {
    if (x > -10.0) return std::log(0.5 * std::erfc(-x * M_SQRT1_2));
    const double x2 = x * x;
    // Phi(x) ~ phi(x)/(-x) * (1 - 1/x^2 + 3/x^4 - 15/x^6)
    const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    return -0.5 * x2 - 0.9189385332046727418 - std::log(-x) + std::log(series);
}

/// log(1 - Phi(x)) by symmetry.
inline double log_normal_sf(double x) { return log_normal_cdf(-x); }

}  // namespace fairflow
