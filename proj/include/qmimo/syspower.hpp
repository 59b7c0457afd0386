// SPDX-License-Identifier: Apache-2.0
//
// Converter power models, the antenna count a hardware power envelope can
// feed, and the link budget that turns geometry into per-UE SNRs.
// SI units throughout; dB/dBm only appear in LinkBudget.

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmimo {

enum class Direction
{
    uplink,
    downlink,
};

inline std::string to_string(Direction d) { return d == Direction::uplink ? "ul" : "dl"; }

inline Direction parse_direction(const std::string& s)
{
    if (s == "ul" || s == "uplink") return Direction::uplink;
    if (s == "dl" || s == "downlink") return Direction::downlink;
    throw std::invalid_argument("unknown direction '" + s + "' (expected ul or dl)");
}

struct PowerModelParams
{
    double v_dd = 3.0;        ///< V
    double l_min = 0.5e-6;    ///< m
    double f_cor = 1e6;       ///< Hz
    double i_0 = 10e-6;       ///< A
    double c_p = 1e-12;       ///< F
    double p_rf_ul = 40e-3;   ///< W per uplink RF chain
    double p_rf_dl = 10e-3;   ///< W per downlink RF chain

    double p_rf(Direction d) const { return d == Direction::uplink ? p_rf_ul : p_rf_dl; }

    void validate() const
    {
        if (!(v_dd > 0 && l_min > 0 && f_cor > 0 && i_0 > 0 && c_p > 0 && p_rf_ul > 0 && p_rf_dl > 0))
            throw std::invalid_argument("PowerModelParams: all constants must be strictly positive");
    }
};

namespace detail {
inline void check_converter_args(int bits, double bandwidth_hz)
{
    if (bits < 1) throw std::invalid_argument("converter power: bits must be >= 1");
    if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("converter power: bandwidth must be positive");
}
} // namespace detail

/// Power of one ADC: 3 V_dd^2 L_min (2B + f_cor) 10^(0.1525 b - 4.838).
inline double p_adc(int bits, double bandwidth_hz, const PowerModelParams& p = {})
{
    detail::check_converter_args(bits, bandwidth_hz);
    return 3.0 * p.v_dd * p.v_dd * p.l_min * (2.0 * bandwidth_hz + p.f_cor) * std::pow(10.0, 0.1525 * bits - 4.838);
}

/// Power of one DAC: static current term plus switched-capacitance term.
inline double p_dac(int bits, double bandwidth_hz, const PowerModelParams& p = {})
{
    detail::check_converter_args(bits, bandwidth_hz);
    return 0.5 * p.v_dd * p.i_0 * (std::ldexp(1.0, bits) - 1.0) +
           bits * p.c_p * (2.0 * bandwidth_hz + p.f_cor) * p.v_dd * p.v_dd;
}

/// ADC power in the uplink, DAC power in the downlink.
inline double p_converter(Direction d, int bits, double bandwidth_hz, const PowerModelParams& p = {})
{
    return d == Direction::uplink ? p_adc(bits, bandwidth_hz, p) : p_dac(bits, bandwidth_hz, p);
}

class InfeasibleConfiguration : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

/// Antennas fed by the envelope when each one needs an RF chain and two
/// converters: floor(p_hw / (p_rf + 2 p_conv)).
///
/// The ratio is nudged by a few ulps before flooring so envelopes built as an
/// exact multiple of one chain's power (count * (p_rf + 2 p_conv)) return that
/// count instead of count - 1.
inline int antennas_budget_or_zero(double p_hw, double p_rf, double p_conv)
{
    if (!(p_hw > 0.0) || !(p_rf >= 0.0) || !(p_conv >= 0.0) || !(p_rf + 2.0 * p_conv > 0.0))
        throw std::invalid_argument("antennas_budget: powers must be positive");
    const double ratio = p_hw / (p_rf + 2.0 * p_conv);
    return static_cast<int>(std::floor(ratio * (1.0 + 8.0 * std::numeric_limits<double>::epsilon())));
}

/// As antennas_budget_or_zero, but a zero count throws InfeasibleConfiguration.
inline int antennas_budget(double p_hw, double p_rf, double p_conv)
{
    const int m = antennas_budget_or_zero(p_hw, p_rf, p_conv);
    if (m == 0) throw InfeasibleConfiguration("antennas_budget: envelope cannot power a single antenna");
    return m;
}

struct LinkBudget
{
    double p_ue_dbm = 20.0;
    double p_bs_dbm = 30.0;
    double alpha = 4.0;             ///< pathloss exponent
    std::vector<double> distances_m = std::vector<double>(8, 100.0);
    double noise_figure_db = 13.0;

    void validate() const
    {
        if (!(alpha > 2.0)) throw std::invalid_argument("LinkBudget: pathloss exponent must exceed 2");
        if (distances_m.empty()) throw std::invalid_argument("LinkBudget: need at least one UE distance");
        for (double d : distances_m)
            if (!(d > 0.0)) throw std::invalid_argument("LinkBudget: distances must be positive");
    }
};

/// Thermal noise power in dBm: nu - 174 + 10 log10(B).
inline double noise_power_dbm(double bandwidth_hz, double noise_figure_db)
{
    if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("noise_power_dbm: bandwidth must be positive");
    return noise_figure_db - 174.0 + 10.0 * std::log10(bandwidth_hz);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

/// SNR in dB of UE `ue`: rho_BS (uplink, UE transmit power) or rho_UE
/// (downlink, BS transmit power).
inline double snr_db(Direction d, const LinkBudget& budget, double bandwidth_hz, std::size_t ue = 0)
{
    budget.validate();
    if (ue >= budget.distances_m.size()) throw std::out_of_range("snr_db: UE index out of range");
    const double pathloss_db = 10.0 * budget.alpha * std::log10(budget.distances_m[ue]);
    const double tx_dbm = d == Direction::uplink ? budget.p_ue_dbm : budget.p_bs_dbm;
    return tx_dbm - pathloss_db - noise_power_dbm(bandwidth_hz, budget.noise_figure_db);
}

inline double snr_linear(Direction d, const LinkBudget& budget, double bandwidth_hz, std::size_t ue = 0)
{
    return db_to_linear(snr_db(d, budget, bandwidth_hz, ue));
}

} // namespace qmimo
