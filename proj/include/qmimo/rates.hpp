// SPDX-License-Identifier: Apache-2.0
//
// Effective SINDRs and ergodic sum rates.
//
// Two routes to the same numbers: the closed forms for MRC/MRT with
// quantized channel estimates (sindr_ul_mrc, sindr_dl_mrt), and the general
// moment-based ratios (sindr_from_moments) that accept either the closed-form
// expectations or empirical ones from the Monte Carlo chain.

#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmimo/bussgang.hpp"

namespace qmimo {

struct SindrInputsUL
{
    int m = 0;
    int k_users = 0;
    int tau = 0;
    double rho_bs = 0.0;
    BussgangStats stats;
};

struct SindrInputsDL
{
    int m = 0;
    int k_users = 0;
    int tau = 0;
    double rho_bs = 0.0;
    double rho_ue = 0.0;
    BussgangStats stats;
};

class NumericalError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

template <class Inputs>
void check_inputs(const Inputs& in, std::size_t ue, const char* who)
{
    if (in.m < 1 || in.k_users < 1 || in.tau < in.k_users || !(in.rho_bs > 0.0))
        throw std::invalid_argument(std::string(who) + ": invalid scenario");
    if (ue >= static_cast<std::size_t>(in.k_users)) throw std::out_of_range(std::string(who) + ": UE index");
    if (in.stats.a_k.size() != static_cast<std::size_t>(in.k_users) ||
        in.stats.b_k.size() != static_cast<std::size_t>(in.k_users))
        throw std::invalid_argument(std::string(who) + ": stats do not match K");
}

inline double checked_ratio(double num, const std::vector<std::pair<const char*, double>>& terms, const char* who)
{
    double den = 0.0;
    for (const auto& [name, v] : terms) den += v;
    const double gamma = num / den;
    if (!std::isfinite(num) || !std::isfinite(den) || !std::isfinite(gamma) || !(den > 0.0))
    {
        std::ostringstream os;
        os << who << ": non-finite SINDR; numerator=" << num;
        for (const auto& [name, v] : terms) os << ", " << name << "=" << v;
        throw NumericalError(os.str());
    }
    return gamma;
}

} // namespace detail

/// Uplink SINDR of UE `ue` with MRC on quantized channel estimates.
inline double sindr_ul_mrc(const SindrInputsUL& in, std::size_t ue)
{
    detail::check_inputs(in, ue, "sindr_ul_mrc");
    const auto& s = in.stats;
    const double m = in.m;
    const double rho = in.rho_bs;
    const double est = 1.0 + 1.0 / (rho * in.tau);
    const double dist = 1.0 / (rho * in.tau * in.tau);
    const double load = rho * in.k_users + 1.0;
    const double gce2 = s.g_ce * s.g_ce;
    const double gul2 = s.g_ul * s.g_ul;
    const double num = rho * gce2 * gul2 * m * m;
    return detail::checked_ratio(num,
                                 {{"interference", load * est * gce2 * gul2 * m},
                                  {"estimate_distortion", load * dist * gul2 * s.a_k[ue]},
                                  {"data_distortion", est * gce2 * s.trace_cd_ul},
                                  {"cross_distortion", dist * s.b_k[ue]}},
                                 "sindr_ul_mrc");
}

/// Downlink SINDR of UE `ue` with MRT on quantized channel estimates.
inline double sindr_dl_mrt(const SindrInputsDL& in, std::size_t ue)
{
    detail::check_inputs(in, ue, "sindr_dl_mrt");
    if (!(in.rho_ue >= 0.0)) throw std::invalid_argument("sindr_dl_mrt: rho_ue must be non-negative");
    const auto& s = in.stats;
    const double m = in.m;
    const double est = 1.0 + 1.0 / (in.rho_bs * in.tau);
    const double dist = 1.0 / (in.rho_bs * in.tau * in.tau);
    const double gce2 = s.g_ce * s.g_ce;
    const double gdl2 = s.g_dl * s.g_dl;
    double sum_a = 0.0;
    for (double a : s.a_k) sum_a += a;
    const double num = in.rho_ue * gce2 * gdl2 * m * m;
    return detail::checked_ratio(num,
                                 {{"interference", in.rho_ue * in.k_users * est * gce2 * gdl2 * m},
                                  {"estimate_distortion", in.rho_ue * dist * gdl2 * sum_a},
                                  {"data_distortion", s.delta * in.rho_ue * s.trace_cd_dl},
                                  {"noise", s.delta}},
                                 "sindr_dl_mrt");
}

/// B * sum_k log2(1 + gamma_k) in bit/s.
inline double sum_rate(double bandwidth_hz, const std::vector<double>& sindrs)
{
    if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("sum_rate: bandwidth must be positive");
    double r = 0.0;
    for (double g : sindrs)
    {
        if (!(g >= 0.0)) throw std::invalid_argument("sum_rate: SINDR must be non-negative");
        r += std::log2(1.0 + g);
    }
    return bandwidth_hz * r;
}

/// The expectation terms of the uplink use-and-then-forget SINDR for UE k.
struct UlMoments
{
    std::complex<double> signal;  ///< E[v_k^H G h_k]
    double gain_sum = 0.0;        ///< sum_i E|v_k^H G h_i|^2
    double noise = 0.0;           ///< E||G v_k||^2
    double distortion = 0.0;      ///< E[v_k^H C_d v_k]
};

/// The expectation terms of the downlink channel-hardening SINDR for UE k.
struct DlMoments
{
    std::complex<double> signal;  ///< E[h_k^H G w_k]
    double gain_sum = 0.0;        ///< sum_i E|h_k^H G w_i|^2
    double distortion = 0.0;      ///< E[h_k^H C_d h_k]
};

/// Relative slack allowed when the fluctuation term sum_i E|.|^2 - |E[.]|^2
/// comes out negative from rounding.
inline constexpr double kMomentResidualTolerance = 1e-9;

namespace detail {
inline double interference_residual(double gain_sum, double signal_power, const char* who)
{
    const double residual = gain_sum - signal_power;
    if (residual < -kMomentResidualTolerance * std::max(gain_sum, signal_power))
    {
        std::ostringstream os;
        os << who << ": sum of gains " << gain_sum << " is below the coherent signal power " << signal_power
           << "; the moments are inconsistent";
        throw NumericalError(os.str());
    }
    return std::max(residual, 0.0);
}
} // namespace detail

inline double sindr_from_moments(const UlMoments& mom, double rho_bs)
{
    const double signal = std::norm(mom.signal);
    const double residual = detail::interference_residual(mom.gain_sum, signal, "sindr_from_moments(ul)");
    return detail::checked_ratio(rho_bs * signal,
                                 {{"interference", rho_bs * residual},
                                  {"noise", mom.noise},
                                  {"distortion", mom.distortion}},
                                 "sindr_from_moments(ul)");
}

inline double sindr_from_moments(const DlMoments& mom, double rho_ue)
{
    const double signal = std::norm(mom.signal);
    const double residual = detail::interference_residual(mom.gain_sum, signal, "sindr_from_moments(dl)");
    return detail::checked_ratio(rho_ue * signal,
                                 {{"interference", rho_ue * residual},
                                  {"distortion", rho_ue * mom.distortion},
                                  {"noise", 1.0}},
                                 "sindr_from_moments(dl)");
}

/// Closed-form uplink expectations for MRC, V = G_ul H_hat.
inline UlMoments closed_form_ul_moments(const SindrInputsUL& in, std::size_t ue)
{
    detail::check_inputs(in, ue, "closed_form_ul_moments");
    const auto& s = in.stats;
    const double m = in.m;
    const double est = 1.0 + 1.0 / (in.rho_bs * in.tau);
    const double dist = 1.0 / (in.rho_bs * in.tau * in.tau);
    const double gce2 = s.g_ce * s.g_ce;
    const double gul2 = s.g_ul * s.g_ul;
    const double gul4 = gul2 * gul2;
    const double cross = est * gce2 * gul4 * m + dist * gul4 * s.a_k[ue];  // E|v^H G h_i|^2, i != k
    const double own = (m + est) * gce2 * gul4 * m + dist * gul4 * s.a_k[ue];
    UlMoments mom;
    mom.signal = s.g_ce * gul2 * m;
    mom.gain_sum = (in.k_users - 1) * cross + own;
    mom.noise = cross;
    mom.distortion = est * gce2 * gul2 * s.trace_cd_ul + dist * gul2 * s.b_k[ue];
    return mom;
}

/// Closed-form downlink expectations for MRT, W = H_hat / sqrt(delta).
/// The own-UE term uses A_k.
inline DlMoments closed_form_dl_moments(const SindrInputsDL& in, std::size_t ue)
{
    detail::check_inputs(in, ue, "closed_form_dl_moments");
    const auto& s = in.stats;
    const double m = in.m;
    const double est = 1.0 + 1.0 / (in.rho_bs * in.tau);
    const double dist = 1.0 / (in.rho_bs * in.tau * in.tau);
    const double gce2 = s.g_ce * s.g_ce;
    const double gdl2 = s.g_dl * s.g_dl;
    DlMoments mom;
    mom.signal = s.g_ce * s.g_dl * m / std::sqrt(s.delta);
    double sum = 0.0;
    for (int i = 0; i < in.k_users; ++i)
    {
        const double base = (static_cast<std::size_t>(i) == ue ? m + est : est) * gce2 * gdl2 * m;
        sum += (base + dist * gdl2 * s.a_k[i]) / s.delta;
    }
    mom.gain_sum = sum;
    mom.distortion = s.trace_cd_dl;
    return mom;
}

/// 1 - tau / T, the pilot overhead post-multiplier for the sum rates.
inline double overhead_factor(int tau, int coherence_t)
{
    if (tau <= 0 || coherence_t <= 0) throw std::invalid_argument("overhead_factor: tau and T must be positive");
    if (tau > coherence_t) throw std::invalid_argument("overhead_factor: tau exceeds the coherence time");
    return 1.0 - static_cast<double>(tau) / coherence_t;
}

inline std::vector<double> sindrs_ul(const SindrInputsUL& in)
{
    std::vector<double> out(in.k_users);
    for (int k = 0; k < in.k_users; ++k) out[k] = sindr_ul_mrc(in, k);
    return out;
}

inline std::vector<double> sindrs_dl(const SindrInputsDL& in)
{
    std::vector<double> out(in.k_users);
    for (int k = 0; k < in.k_users; ++k) out[k] = sindr_dl_mrt(in, k);
    return out;
}

inline SindrInputsUL ul_inputs(const SystemConfig& c, const BussgangStats& s)
{
    return {c.m, c.k_users, c.tau, c.rho_bs, s};
}

inline SindrInputsDL dl_inputs(const SystemConfig& c, const BussgangStats& s)
{
    return {c.m, c.k_users, c.tau, c.rho_bs, c.rho_ue, s};
}

} // namespace qmimo
