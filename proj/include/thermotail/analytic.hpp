#pragma once

#include <cmath>

namespace thermotail {

/// psi(t) = e^t - t - 1, the exponential with its first two Taylor terms
/// removed. Uses expm1 so small |t| keeps full relative accuracy.
inline double psi(double t) {
    return std::expm1(t) - t;
}

/// zeta_{a,b}(t) = (b - t)(t - a), the variance bound for a random
/// variable with range [a, b] and mean t. Non-increasing on [(a+b)/2, inf).
inline double zeta(double a, double b, double t) {
    return (b - t) * (t - a);
}

} // namespace thermotail
