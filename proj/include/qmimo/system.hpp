// SPDX-License-Identifier: Apache-2.0
//
// Scenario scalars and the per-phase quantizers derived from them.

#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "qmimo/quant.hpp"

namespace qmimo {

struct SystemConfig
{
    int m = 32;             ///< BS antennas
    int k_users = 4;
    int tau = 8;            ///< pilot length
    int bits = 2;           ///< converter resolution (ADCs and DACs)
    double bandwidth_hz = 1e8;
    double rho_bs = 1.0;    ///< uplink SNR at the BS, linear
    double rho_ue = 1.0;    ///< downlink SNR at the UEs, linear

    /// Input variance of every uplink-side ADC, pilot and data phase alike.
    double adc_input_variance() const { return rho_bs * k_users + 1.0; }
    /// Per-entry variance of the precoded DAC input, Diag(E[W W^H]) = 1/M.
    double dac_input_variance() const { return 1.0 / m; }

    void validate() const
    {
        auto fail = [](const std::string& what) { throw std::invalid_argument("SystemConfig: " + what); };
        if (m < 1) fail("m must be >= 1");
        if (k_users < 1) fail("k_users must be >= 1");
        if (tau < k_users) fail("tau must be >= k_users");
        if (bits < 1 || bits > 12) fail("bits must be in [1, 12]");
        if (!(bandwidth_hz > 0.0)) fail("bandwidth must be positive");
        if (!(rho_bs > 0.0) || !std::isfinite(rho_bs)) fail("rho_bs must be positive");
        if (!(rho_ue > 0.0) || !std::isfinite(rho_ue)) fail("rho_ue must be positive");
    }
};

/// Quantizers for the three phases. The pilot-phase and data-phase ADCs are
/// the same device and see the same input variance.
struct QuantizerSet
{
    QuantizerSpec ce;
    QuantizerSpec ul;
    QuantizerSpec dl;
};

/// Lloyd-Max design at the phase's input variance followed by label rescaling
/// to that same variance.
inline QuantizerSpec matched_quantizer(int bits, double complex_variance)
{
    return rescale_labels(design_lloyd_max(bits, std::sqrt(complex_variance / 2.0)), complex_variance);
}

inline QuantizerSet make_quantizers(const SystemConfig& config)
{
    config.validate();
    QuantizerSpec adc = matched_quantizer(config.bits, config.adc_input_variance());
    QuantizerSpec dac = matched_quantizer(config.bits, config.dac_input_variance());
    return {adc, adc, std::move(dac)};
}

} // namespace qmimo
