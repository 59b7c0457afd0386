// SPDX-License-Identifier: Apache-2.0
//
// Bussgang gains of the quantizers and Monte Carlo estimates of the
// second moments of their distortion.
//
// With i.i.d. Rayleigh fading every quantizer input has a scaled-identity
// diagonal covariance, so each Bussgang matrix is a scalar times identity and
// the data-phase distortion covariances are (per-entry power) * I.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "qmimo/accumulate.hpp"
#include "qmimo/airlink.hpp"
#include "qmimo/parallel.hpp"
#include "qmimo/quant.hpp"
#include "qmimo/random.hpp"
#include "qmimo/system.hpp"

namespace qmimo {

struct BussgangStats
{
    double g_ce = 0.0;
    double g_ul = 0.0;
    double g_dl = 0.0;
    double trace_cd_ul = 0.0;
    double trace_cd_dl = 0.0;
    std::vector<double> a_k;
    std::vector<double> b_k;
    double delta = 0.0;     ///< E||h_hat||^2
    double y_var_ul = 0.0;  ///< rho_BS K + 1
    double w_var_dl = 0.0;  ///< 1 / M
    std::size_t trials = 0;
    std::uint64_t seed = 0;
};

/// Bussgang gain of a quantizer fed by CN(0, complex_variance):
/// (pi c)^(-1/2) sum_n l_n (exp(-t_n^2 / c) - exp(-t_{n+1}^2 / c)).
inline double gain_scalar(const QuantizerSpec& spec, double complex_variance)
{
    if (!(complex_variance > 0.0)) throw std::invalid_argument("gain_scalar: variance must be positive");
    auto edge = [&](double t) { return std::isinf(t) ? 0.0 : std::exp(-t * t / complex_variance); };
    double sum = 0.0;
    for (std::size_t n = 0; n < spec.levels(); ++n)
        sum += spec.labels[n] * (edge(spec.thresholds[n]) - edge(spec.thresholds[n + 1]));
    return sum / std::sqrt(std::numbers::pi * complex_variance);
}

inline constexpr std::size_t kMinDistortionTrials = 10000;

struct MonteCarloEstimate
{
    double value = 0.0;
    double standard_error = 0.0;
};

/// tr(C_d) for d = Q(y) - G y, y a dim-length CN(0, complex_variance I) vector.
inline MonteCarloEstimate distortion_trace_estimate(const QuantizerSpec& spec, double complex_variance, int dim,
                                                    std::size_t trials, std::uint64_t seed, unsigned threads = 0)
{
    if (trials < kMinDistortionTrials)
        throw std::invalid_argument("distortion_trace: need at least 1e4 trials for a usable estimate");
    if (dim < 1) throw std::invalid_argument("distortion_trace: dim must be >= 1");
    const double g = gain_scalar(spec, complex_variance);
    const auto acc = reduce_trials(
        trials, RunningMoment{},
        [&](RunningMoment& m, std::size_t t) {
            Engine engine = make_stream(seed, Phase::distortion, t);
            ComplexNormal draw(complex_variance);
            double power = 0.0;
            for (int i = 0; i < dim; ++i)
            {
                const cdouble y = draw(engine);
                power += std::norm(quantize(spec, y) - g * y);
            }
            m.add(power);
        },
        threads);
    return {acc.mean(), acc.standard_error()};
}

inline double distortion_trace(const QuantizerSpec& spec, double complex_variance, int dim, std::size_t trials,
                               std::uint64_t seed, unsigned threads = 0)
{
    return distortion_trace_estimate(spec, complex_variance, dim, trials, seed, threads).value;
}

/// Quantizes every entry of `in` into `out` (resized as needed).
inline void quantize_matrix(const QuantizerSpec& spec, const Eigen::MatrixXcd& in, Eigen::MatrixXcd& out)
{
    out.resize(in.rows(), in.cols());
    const cdouble* src = in.data();
    cdouble* dst = out.data();
    for (Eigen::Index i = 0; i < in.size(); ++i) dst[i] = quantize(spec, src[i]);
}

struct Projections
{
    std::vector<double> a_k;
    std::vector<double> b_k;
};

struct ProjectionOptions
{
    bool direct_b_k = false;  ///< estimate B_k without the scaled-identity shortcut
    unsigned threads = 0;
};

/// Monte Carlo estimates of A_k = tr(C_d^ce conj(Pbar_k) Pbar_k^T) = E||Pbar_k^T d^ce||^2
/// and B_k = tr(C_d^ce conj(Pbar_k) C_d^ul Pbar_k^T).
///
/// By default B_k = cd_ul_per_entry * A_k, which is exact when C_d^ul is a
/// scaled identity. With direct_b_k, each trial instead draws an independent
/// data-phase distortion d' and accumulates |d'^H Pbar_k^T d^ce|^2.
inline Projections ce_distortion_projections(const QuantizerSpec& spec, const PilotMatrix& pilots, int m,
                                             double rho_bs, double cd_ul_per_entry, std::size_t trials,
                                             std::uint64_t seed, const ProjectionOptions& options = {})
{
    if (m < 1) throw std::invalid_argument("ce_distortion_projections: m must be >= 1");
    if (trials == 0) throw std::invalid_argument("ce_distortion_projections: trials must be positive");
    if (!(rho_bs > 0.0)) throw std::invalid_argument("ce_distortion_projections: rho_bs must be positive");
    const int k_users = pilots.k_users;
    const double y_var = rho_bs * k_users + 1.0;
    const double design_var = 2.0 * spec.design_std * spec.design_std;
    if (std::abs(design_var - y_var) > 1e-9 * y_var)
        throw std::invalid_argument("ce_distortion_projections: quantizer designed for variance " +
                                    std::to_string(design_var) + " but pilot-phase input variance is " +
                                    std::to_string(y_var));
    const double g = gain_scalar(spec, y_var);

    struct Acc
    {
        std::vector<CompensatedSum> a, b;
        void merge(const Acc& o)
        {
            for (std::size_t i = 0; i < a.size(); ++i)
            {
                a[i].merge(o.a[i]);
                b[i].merge(o.b[i]);
            }
        }
    };
    const Acc zero{std::vector<CompensatedSum>(k_users), std::vector<CompensatedSum>(k_users)};

    const auto acc = reduce_trials(
        trials, zero,
        [&](Acc& acc, std::size_t t) {
            Engine engine = make_stream(seed, Phase::projection, t);
            ComplexNormal unit;
            Eigen::MatrixXcd h(m, k_users), z(m, pilots.tau), r;
            unit.fill(engine, h);
            unit.fill(engine, z);
            const Eigen::MatrixXcd y = pilot_signal(h, pilots, rho_bs) + z;
            quantize_matrix(spec, y, r);
            const Eigen::MatrixXcd u = pilot_despread(r - g * y, pilots);
            Eigen::VectorXcd d_ul;
            if (options.direct_b_k)
            {
                ComplexNormal data(y_var);
                d_ul.resize(m);
                for (int i = 0; i < m; ++i)
                {
                    const cdouble s = data(engine);
                    d_ul(i) = quantize(spec, s) - g * s;
                }
            }
            for (int k = 0; k < k_users; ++k)
            {
                const double a = u.col(k).squaredNorm();
                acc.a[k].add(a);
                if (options.direct_b_k) acc.b[k].add(std::norm(d_ul.dot(u.col(k))));
            }
        },
        options.threads);

    Projections out;
    out.a_k.resize(k_users);
    out.b_k.resize(k_users);
    for (int k = 0; k < k_users; ++k)
    {
        out.a_k[k] = acc.a[k].value() / static_cast<double>(trials);
        out.b_k[k] = options.direct_b_k ? acc.b[k].value() / static_cast<double>(trials) : cd_ul_per_entry * out.a_k[k];
    }
    return out;
}

struct StatsOptions
{
    std::size_t trials = 100000;
    std::uint64_t seed = 1;
    bool direct_b_k = false;
    unsigned threads = 0;
};

/// trace(E[h_hat h_hat^H]) = K (1 + 1/(rho tau)) G_ce^2 M + (1/(rho tau^2)) sum_k A_k.
inline double estimate_power(int m, int k_users, int tau, double rho_bs, double g_ce, const std::vector<double>& a_k)
{
    double sum_a = 0.0;
    for (double a : a_k) sum_a += a;
    return k_users * (1.0 + 1.0 / (rho_bs * tau)) * g_ce * g_ce * m + sum_a / (rho_bs * tau * tau);
}

/// Every gain and distortion moment the closed-form SINDRs need.
inline BussgangStats assemble_stats(const SystemConfig& config, const QuantizerSet& specs,
                                    const StatsOptions& options = {})
{
    config.validate();
    BussgangStats s;
    s.y_var_ul = config.adc_input_variance();
    s.w_var_dl = config.dac_input_variance();
    s.g_ce = gain_scalar(specs.ce, s.y_var_ul);
    s.g_ul = gain_scalar(specs.ul, s.y_var_ul);
    s.g_dl = gain_scalar(specs.dl, s.w_var_dl);
    s.trace_cd_ul = distortion_trace(specs.ul, s.y_var_ul, config.m, options.trials,
                                     stream_seed(options.seed, Phase::uplink_data, 0), options.threads);
    s.trace_cd_dl = distortion_trace(specs.dl, s.w_var_dl, config.m, options.trials,
                                     stream_seed(options.seed, Phase::downlink_data, 0), options.threads);
    const auto pilots = dft_pilots(config.tau, config.k_users);
    auto proj = ce_distortion_projections(specs.ce, pilots, config.m, config.rho_bs, s.trace_cd_ul / config.m,
                                          options.trials, stream_seed(options.seed, Phase::channel_estimation, 0),
                                          {options.direct_b_k, options.threads});
    s.a_k = std::move(proj.a_k);
    s.b_k = std::move(proj.b_k);
    s.delta = estimate_power(config.m, config.k_users, config.tau, config.rho_bs, s.g_ce, s.a_k);
    s.trials = options.trials;
    s.seed = options.seed;
    return s;
}

} // namespace qmimo
