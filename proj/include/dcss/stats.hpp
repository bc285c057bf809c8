#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dcss {

// Gaussian tail probability Q(z) = P(Z > z) for standard normal Z.
// Computed through the complementary error function, which keeps absolute
// error far below 1e-12 over the whole range and stays relatively accurate
// deep into the tail.
inline double q_function(double z) {
    if (!std::isfinite(z)) throw std::domain_error("q_function: non-finite argument");
    return 0.5 * std::erfc(z * 0.7071067811865475244);  // z / sqrt(2)
}

// Inverse of q_function on (0, 1). Bracketed bisection on q_function itself,
// so the round-trip identity q_function(q_inverse(p)) == p holds by
// construction to well below 1e-9.
inline double q_inverse(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("q_inverse: p must be in (0,1)");
    double lo = -40.0, hi = 40.0;
    // 200 halvings shrink the bracket width below 1e-58; the midpoint
    // converges to the closest representable double long before that.
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (q_function(mid) > p)
            lo = mid;  // Q decreasing: value too large means z too small
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

// Log-density of N(mean, variance) at x.
inline double gaussian_logpdf(double x, double mean, double variance) {
    if (!(variance > 0.0) || !std::isfinite(variance))
        throw std::domain_error("gaussian_logpdf: variance must be positive");
    if (!std::isfinite(x) || !std::isfinite(mean))
        throw std::domain_error("gaussian_logpdf: non-finite argument");
    static constexpr double log_two_pi = 1.8378770664093454836;
    const double d = x - mean;
    return -0.5 * (log_two_pi + std::log(variance)) - d * d / (2.0 * variance);
}

}  // namespace dcss
