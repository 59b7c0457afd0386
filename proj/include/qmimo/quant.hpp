// SPDX-License-Identifier: Apache-2.0
//
// b-bit scalar quantizers for the in-phase and quadrature rails of a
// low-resolution ADC/DAC: Lloyd-Max design for Gaussian inputs, label
// rescaling to a target output variance, and the entrywise complex
// quantization function.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "qmimo/gaussian.hpp"

namespace qmimo {

using cdouble = std::complex<double>;

/// Thresholds and labels of a b-bit quantizer applied to one real rail.
///
/// Cell n is the half-open interval (thresholds[n], thresholds[n+1]] and maps
/// to labels[n]. thresholds.front() is -inf and thresholds.back() is +inf.
struct QuantizerSpec
{
    int bits = 0;
    std::vector<double> thresholds;
    std::vector<double> labels;
    double design_std = 0.0; ///< per-rail standard deviation it was designed for

    std::size_t levels() const { return labels.size(); }

    /// Throws std::invalid_argument naming the first violated invariant.
    void validate() const
    {
        auto fail = [](const std::string& what) { throw std::invalid_argument("QuantizerSpec: " + what); };
        if (bits < 1) fail("bits must be >= 1");
        const std::size_t n = std::size_t{1} << bits;
        if (labels.size() != n) fail("expected 2^b labels");
        if (thresholds.size() != n + 1) fail("expected 2^b + 1 thresholds");
        if (!(design_std > 0.0)) fail("design_std must be positive");
        if (thresholds.front() != -std::numeric_limits<double>::infinity() ||
            thresholds.back() != std::numeric_limits<double>::infinity())
            fail("outer thresholds must be -inf and +inf");
        for (std::size_t i = 0; i + 1 < thresholds.size(); ++i)
            if (!(thresholds[i] < thresholds[i + 1])) fail("thresholds not strictly increasing");
        for (std::size_t i = 0; i < n; ++i)
            if (!(labels[i] > thresholds[i] && labels[i] <= thresholds[i + 1])) fail("label outside its cell");
        const double scale = std::abs(labels.back());
        for (std::size_t i = 0; i < n; ++i)
        {
            if (std::abs(labels[i] + labels[n - 1 - i]) > 1e-9 * scale) fail("labels not odd-symmetric");
            if (i > 0 && std::abs(thresholds[i] + thresholds[n - i]) > 1e-9 * scale)
                fail("thresholds not odd-symmetric");
        }
    }
};

/// Raised when the Lloyd-Max fixed point is not reached.
class ConvergenceError : public std::runtime_error
{
  public:
    ConvergenceError(int bits, int iterations, double movement)
        : std::runtime_error(message(bits, iterations, movement)), iterations_(iterations), movement_(movement)
    {
    }
    int iterations() const { return iterations_; }
    double last_movement() const { return movement_; }

  private:
    static std::string message(int bits, int iterations, double movement)
    {
        std::ostringstream os;
        os << "Lloyd-Max (" << bits << " bits) did not converge after " << iterations
           << " iterations; last max relative label movement " << movement;
        return os.str();
    }
    int iterations_;
    double movement_;
};

struct LloydMaxOptions
{
    double tolerance = 1e-12;   ///< max relative label movement at convergence
    int max_iterations = 10000;
};

namespace detail {

inline std::vector<double> midpoint_thresholds(const std::vector<double>& labels)
{
    const std::size_t n = labels.size();
    std::vector<double> t(n + 1);
    t.front() = -std::numeric_limits<double>::infinity();
    t.back() = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < n; ++i) t[i] = 0.5 * (labels[i - 1] + labels[i]);
    if (n % 2 == 0) t[n / 2] = 0.0;
    return t;
}

// Cell probabilities under a zero-mean real Gaussian with the given std.
inline std::vector<double> cell_probabilities(const std::vector<double>& thresholds, double std_dev)
{
    std::vector<double> p(thresholds.size() - 1);
    for (std::size_t i = 0; i < p.size(); ++i)
        p[i] = gaussian::interval_probability(thresholds[i] / std_dev, thresholds[i + 1] / std_dev);
    return p;
}

// Centroid of (a, b] under N(0, 1) and its partial derivatives.
struct CellCentroid
{
    double value;
    double d_lower;
    double d_upper;
};

inline CellCentroid cell_centroid(double a, double b)
{
    const double pa = gaussian::pdf(a);
    const double pb = gaussian::pdf(b);
    double mass = 0.0;
    double c = 0.0;
    if (std::isfinite(a) && std::isfinite(b) && b - a < 1.0)
    {
        // Narrow cell: the closed form cancels badly, so integrate the mass and
        // the first moment about the midpoint directly.
        const double mid = 0.5 * (a + b);
        using rule = boost::math::quadrature::gauss<double, 15>;
        mass = rule::integrate([](double x) { return gaussian::pdf(x); }, a, b);
        const double offset = rule::integrate([mid](double x) { return (x - mid) * gaussian::pdf(x); }, a, b);
        c = mid + offset / mass;
    }
    else
    {
        mass = gaussian::interval_probability(a, b);
        c = (pa - pb) / mass;
    }
    return {c, std::isinf(a) ? 0.0 : pa * (c - a) / mass, std::isinf(b) ? 0.0 : pb * (b - c) / mass};
}

// One Lloyd step on standardized labels; returns the max relative movement.
inline double lloyd_step(std::vector<double>& labels, std::vector<double>& scratch)
{
    const std::size_t n = labels.size();
    const auto t = midpoint_thresholds(labels);
    for (std::size_t i = n / 2; i < n; ++i)
    {
        scratch[i] = cell_centroid(t[i], t[i + 1]).value;
        scratch[n - 1 - i] = -scratch[i];
    }
    double movement = 0.0;
    for (std::size_t i = n / 2; i < n; ++i)
        movement = std::max(movement, std::abs(scratch[i] - labels[i]) / std::abs(scratch[i]));
    labels.swap(scratch);
    return movement;
}

// Newton step on F(l) = l - centroid(l). The Jacobian is tridiagonal because
// each centroid only sees its two midpoint thresholds. Returns the max
// relative movement, or +inf (labels untouched) if the step would break the
// ordering of the labels.
inline double newton_step(std::vector<double>& labels)
{
    const std::size_t n = labels.size();
    const auto t = midpoint_thresholds(labels);
    std::vector<double> lower(n, 0.0), diag(n), upper(n, 0.0), rhs(n);
    for (std::size_t i = 0; i < n; ++i)
    {
        const auto cc = cell_centroid(t[i], t[i + 1]);
        rhs[i] = -(labels[i] - cc.value);
        diag[i] = 1.0 - 0.5 * (cc.d_lower + cc.d_upper);
        if (i > 0) lower[i] = -0.5 * cc.d_lower;
        if (i + 1 < n) upper[i] = -0.5 * cc.d_upper;
    }
    // Thomas algorithm.
    for (std::size_t i = 1; i < n; ++i)
    {
        const double w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    std::vector<double> step(n);
    step[n - 1] = rhs[n - 1] / diag[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) step[i] = (rhs[i] - upper[i] * step[i + 1]) / diag[i];

    std::vector<double> next(n);
    for (std::size_t i = n / 2; i < n; ++i)
    {
        next[i] = labels[i] + 0.5 * (step[i] - step[n - 1 - i]);
        next[n - 1 - i] = -next[i];
    }
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(next[i] < next[i + 1]) || !std::isfinite(next[i])) return std::numeric_limits<double>::infinity();
    double movement = 0.0;
    for (std::size_t i = n / 2; i < n; ++i)
        movement = std::max(movement, std::abs(next[i] - labels[i]) / std::abs(next[i]));
    labels.swap(next);
    return movement;
}

} // namespace detail

/// MMSE (Lloyd-Max) quantizer for a real N(0, component_std^2) input.
///
/// Starts from the centres of equiprobable cells and alternates the centroid
/// and midpoint conditions using closed-form Gaussian cell moments. Plain
/// Lloyd steps slow down badly beyond ~8 bits, so once the labels move by
/// less than 1e-3 per step the same fixed point is polished with Newton steps.
/// Labels are kept odd-symmetric throughout.
inline QuantizerSpec design_lloyd_max(int bits, double component_std, const LloydMaxOptions& options = {})
{
    if (bits < 1 || bits > 12) throw std::invalid_argument("design_lloyd_max: bits must be in [1, 12]");
    if (!(component_std > 0.0) || !std::isfinite(component_std))
        throw std::invalid_argument("design_lloyd_max: component_std must be positive");

    const std::size_t n = std::size_t{1} << bits;
    std::vector<double> labels(n);
    for (std::size_t i = 0; i < n; ++i)
        labels[i] = gaussian::quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));

    std::vector<double> scratch(n);
    double movement = std::numeric_limits<double>::infinity();
    int iteration = 0;
    bool newton = false;
    while (iteration < options.max_iterations)
    {
        ++iteration;
        if (newton)
        {
            const double m = detail::newton_step(labels);
            if (std::isinf(m))
            {
                newton = false;
                movement = detail::lloyd_step(labels, scratch);
            }
            else
            {
                movement = m;
            }
        }
        else
        {
            movement = detail::lloyd_step(labels, scratch);
            newton = movement < 1e-3;
        }
        if (movement < options.tolerance) break;
    }
    if (!(movement < options.tolerance)) throw ConvergenceError(bits, iteration, movement);

    QuantizerSpec spec;
    spec.bits = bits;
    spec.thresholds = detail::midpoint_thresholds(labels);
    spec.labels = std::move(labels);
    for (std::size_t i = 1; i < n; ++i) spec.thresholds[i] *= component_std;
    for (auto& l : spec.labels) l *= component_std;
    spec.design_std = component_std;
    return spec;
}

/// Complex output variance E|Q(y)|^2 for y ~ CN(0, complex_variance).
inline double output_variance(const QuantizerSpec& spec, double complex_variance)
{
    const auto p = detail::cell_probabilities(spec.thresholds, std::sqrt(complex_variance / 2.0));
    double power = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) power += spec.labels[i] * spec.labels[i] * p[i];
    return 2.0 * power;
}

/// Multiplies every label by one factor so that a CN(0, target) input gives an
/// output of complex variance target. Thresholds are left untouched.
inline QuantizerSpec rescale_labels(const QuantizerSpec& spec, double target_complex_variance)
{
    if (!(target_complex_variance > 0.0) || !std::isfinite(target_complex_variance))
        throw std::invalid_argument("rescale_labels: target variance must be positive");
    spec.validate();
    const double current = output_variance(spec, target_complex_variance);
    if (!(current > 0.0)) throw std::invalid_argument("rescale_labels: quantizer has zero output power");
    const double zeta = std::sqrt(target_complex_variance / current);
    QuantizerSpec out = spec;
    for (auto& l : out.labels) l *= zeta;
    out.design_std = std::sqrt(target_complex_variance / 2.0);
    return out;
}

/// Thresholds and labels multiplied by factor > 0.
inline QuantizerSpec scaled(const QuantizerSpec& spec, double factor)
{
    if (!(factor > 0.0)) throw std::invalid_argument("scaled: factor must be positive");
    QuantizerSpec out = spec;
    for (std::size_t i = 1; i + 1 < out.thresholds.size(); ++i) out.thresholds[i] *= factor;
    for (auto& l : out.labels) l *= factor;
    out.design_std *= factor;
    return out;
}

/// Label of the cell (t_n, t_{n+1}] containing x.
inline double quantize_rail(const QuantizerSpec& spec, double x)
{
    // Interior thresholds are [1, size-1); lower_bound gives the first t >= x.
    const auto first = spec.thresholds.begin() + 1;
    const auto last = spec.thresholds.end() - 1;
    const auto it = std::lower_bound(first, last, x);
    return spec.labels[static_cast<std::size_t>(it - first)];
}

inline cdouble quantize(const QuantizerSpec& spec, cdouble value)
{
    return {quantize_rail(spec, value.real()), quantize_rail(spec, value.imag())};
}

inline void quantize(const QuantizerSpec& spec, std::span<const cdouble> in, std::span<cdouble> out)
{
    if (in.size() != out.size()) throw std::invalid_argument("quantize: size mismatch");
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = quantize(spec, in[i]);
}

} // namespace qmimo
