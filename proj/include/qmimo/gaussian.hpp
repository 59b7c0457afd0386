// SPDX-License-Identifier: Apache-2.0
//
// Scalar Gaussian helpers shared by the quantizer design and the Bussgang
// gain computations.

#pragma once

#include <cmath>
#include <numbers>

#include <boost/math/distributions/normal.hpp>

namespace qmimo::gaussian {

inline double pdf(double x)
{
    if (std::isinf(x)) return 0.0;
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Upper tail 1 - Phi(x), accurate for large positive x.
inline double tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

// Probability of the interval (a, b] under N(0, 1). Evaluated on the side of
// zero that avoids cancellation in the tails.
inline double interval_probability(double a, double b)
{
    if (a >= 0.0) return tail(a) - tail(b);
    if (b <= 0.0) return cdf(b) - cdf(a);
    return 1.0 - tail(b) - cdf(a);
}

inline double quantile(double p)
{
    static const boost::math::normal_distribution<double> standard;
    return boost::math::quantile(standard, p);
}

} // namespace qmimo::gaussian
