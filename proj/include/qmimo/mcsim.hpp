// SPDX-License-Identifier: Apache-2.0
//
// Full-chain Monte Carlo: quantized pilots -> channel estimate -> MRC/MRT ->
// quantized data phase. Estimates the expectation terms of the general
// SINDR expressions empirically and compares them with the closed forms.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmimo/accumulate.hpp"
#include "qmimo/airlink.hpp"
#include "qmimo/bussgang.hpp"
#include "qmimo/parallel.hpp"
#include "qmimo/random.hpp"
#include "qmimo/rates.hpp"
#include "qmimo/system.hpp"

namespace qmimo {

/// Everything a trial needs that does not change between trials.
struct ChainSetup
{
    SystemConfig config;
    QuantizerSet specs;
    BussgangStats stats;
    PilotMatrix pilots;
};

inline ChainSetup make_chain_setup(const SystemConfig& config, const StatsOptions& stats_options)
{
    auto specs = make_quantizers(config);
    auto stats = assemble_stats(config, specs, stats_options);
    return {config, std::move(specs), std::move(stats), dft_pilots(config.tau, config.k_users)};
}

/// Pilot phase of one trial: the channel and its quantized estimate.
struct TrialDraw
{
    Eigen::MatrixXcd h;      ///< M x K
    Eigen::MatrixXcd y_ce;   ///< M x tau ADC input
    Eigen::MatrixXcd r_ce;   ///< M x tau ADC output
    Eigen::MatrixXcd h_hat;  ///< M x K
};

inline TrialDraw draw_pilot_phase(const ChainSetup& s, std::uint64_t seed, std::size_t trial)
{
    const auto& c = s.config;
    Engine engine = make_stream(seed, Phase::channel_estimation, trial);
    ComplexNormal unit;
    TrialDraw d;
    d.h.resize(c.m, c.k_users);
    unit.fill(engine, d.h);
    Eigen::MatrixXcd z(c.m, c.tau);
    unit.fill(engine, z);
    d.y_ce = pilot_signal(d.h, s.pilots, c.rho_bs) + z;
    quantize_matrix(s.specs.ce, d.y_ce, d.r_ce);
    d.h_hat = estimate_channel(d.r_ce, s.pilots, c.rho_bs);
    return d;
}

/// One trial's samples of the uplink expectation terms, per UE.
struct UlContribution
{
    std::vector<std::complex<double>> signal;  ///< v_k^H G h_k
    std::vector<double> gain_sum;              ///< sum_i |v_k^H G h_i|^2
    std::vector<double> noise;                 ///< ||G v_k||^2
    std::vector<double> distortion;            ///< |v_k^H d|^2, the action of d d^H on v_k
    std::complex<double> residual;             ///< mean_m d_m conj(y_m)
    std::complex<double> off_diagonal;         ///< d_0 conj(d_1)
    double distortion_power = 0.0;             ///< ||d||^2 / M
};

struct DlContribution
{
    std::vector<std::complex<double>> signal;  ///< h_k^H G w_k
    std::vector<double> gain_sum;              ///< sum_i |h_k^H G w_i|^2
    std::vector<double> distortion;            ///< |h_k^H d|^2
    std::complex<double> residual;             ///< mean_m d_m conj(s_m)
    double precoder_power = 0.0;               ///< ||W||_F^2
    Eigen::VectorXd row_power;                 ///< diag(W W^H)
};

inline UlContribution run_ul_trial(const ChainSetup& s, const TrialDraw& ce, std::uint64_t seed, std::size_t trial)
{
    const auto& c = s.config;
    const double g = s.stats.g_ul;
    Engine engine = make_stream(seed, Phase::uplink_data, trial);
    ComplexNormal unit;
    Eigen::VectorXcd x(c.k_users), z(c.m);
    unit.fill(engine, x);
    unit.fill(engine, z);
    const Eigen::VectorXcd y = std::sqrt(c.rho_bs) * ce.h * x + z;
    Eigen::MatrixXcd r;
    quantize_matrix(s.specs.ul, y, r);
    const Eigen::VectorXcd d = r.col(0) - g * y;

    const Eigen::MatrixXcd v = g * ce.h_hat;                  // MRC
    const Eigen::MatrixXcd vgh = v.adjoint() * (g * ce.h);    // [k, i] = v_k^H G h_i
    const Eigen::VectorXcd vd = v.adjoint() * d;

    UlContribution out;
    out.signal.resize(c.k_users);
    out.gain_sum.resize(c.k_users);
    out.noise.resize(c.k_users);
    out.distortion.resize(c.k_users);
    for (int k = 0; k < c.k_users; ++k)
    {
        out.signal[k] = vgh(k, k);
        out.gain_sum[k] = vgh.row(k).squaredNorm();
        out.noise[k] = g * g * v.col(k).squaredNorm();
        out.distortion[k] = std::norm(vd(k));
    }
    out.residual = std::conj(d.dot(y)) / static_cast<double>(c.m);  // Eigen's dot conjugates its left operand
    out.off_diagonal = c.m > 1 ? d(0) * std::conj(d(1)) : std::complex<double>{};
    out.distortion_power = d.squaredNorm() / c.m;
    return out;
}

inline DlContribution run_dl_trial(const ChainSetup& s, const TrialDraw& ce, std::uint64_t seed, std::size_t trial)
{
    const auto& c = s.config;
    const double g = s.stats.g_dl;
    Engine engine = make_stream(seed, Phase::downlink_data, trial);
    ComplexNormal unit;
    Eigen::VectorXcd x(c.k_users);
    unit.fill(engine, x);

    const Eigen::MatrixXcd w = ce.h_hat / std::sqrt(s.stats.delta);  // MRT
    const Eigen::VectorXcd sig = w * x;
    Eigen::MatrixXcd r;
    quantize_matrix(s.specs.dl, sig, r);
    const Eigen::VectorXcd d = r.col(0) - g * sig;

    const Eigen::MatrixXcd hgw = ce.h.adjoint() * (g * w);  // [k, i] = h_k^H G w_i
    const Eigen::VectorXcd hd = ce.h.adjoint() * d;

    DlContribution out;
    out.signal.resize(c.k_users);
    out.gain_sum.resize(c.k_users);
    out.distortion.resize(c.k_users);
    for (int k = 0; k < c.k_users; ++k)
    {
        out.signal[k] = hgw(k, k);
        out.gain_sum[k] = hgw.row(k).squaredNorm();
        out.distortion[k] = std::norm(hd(k));
    }
    out.residual = std::conj(d.dot(sig)) / static_cast<double>(c.m);
    out.precoder_power = w.squaredNorm();
    out.row_power = w.rowwise().squaredNorm();
    return out;
}

/// Mergeable accumulators for every moment the validator reports.
struct ChainAccumulator
{
    std::vector<ComplexMoment> ul_signal, dl_signal;
    std::vector<RunningMoment> ul_gain_sum, ul_noise, ul_distortion;
    std::vector<RunningMoment> dl_gain_sum, dl_distortion;
    ComplexMoment ce_residual, ul_residual, dl_residual, ul_off_diagonal;
    RunningMoment estimate_power, ul_distortion_power, precoder_power;
    std::vector<RunningMoment> row_power;

    ChainAccumulator() = default;
    ChainAccumulator(int k_users, int m)
        : ul_signal(k_users), dl_signal(k_users), ul_gain_sum(k_users), ul_noise(k_users),
          ul_distortion(k_users), dl_gain_sum(k_users), dl_distortion(k_users), row_power(m)
    {
    }

    void add(const TrialDraw& ce, double g_ce, const UlContribution& ul, const DlContribution& dl)
    {
        const Eigen::Index n = ce.y_ce.size();
        const std::complex<double> ce_res =
            std::conj((ce.r_ce - g_ce * ce.y_ce).reshaped().dot(ce.y_ce.reshaped())) / static_cast<double>(n);
        ce_residual.add(ce_res);
        estimate_power.add(ce.h_hat.squaredNorm());
        for (std::size_t k = 0; k < ul_signal.size(); ++k)
        {
            ul_signal[k].add(ul.signal[k]);
            ul_gain_sum[k].add(ul.gain_sum[k]);
            ul_noise[k].add(ul.noise[k]);
            ul_distortion[k].add(ul.distortion[k]);
            dl_signal[k].add(dl.signal[k]);
            dl_gain_sum[k].add(dl.gain_sum[k]);
            dl_distortion[k].add(dl.distortion[k]);
        }
        ul_residual.add(ul.residual);
        ul_off_diagonal.add(ul.off_diagonal);
        ul_distortion_power.add(ul.distortion_power);
        dl_residual.add(dl.residual);
        precoder_power.add(dl.precoder_power);
        for (std::size_t i = 0; i < row_power.size(); ++i) row_power[i].add(dl.row_power(static_cast<Eigen::Index>(i)));
    }

    void merge(const ChainAccumulator& o)
    {
        auto all = [](auto& a, const auto& b) {
            for (std::size_t i = 0; i < a.size(); ++i) a[i].merge(b[i]);
        };
        all(ul_signal, o.ul_signal);
        all(dl_signal, o.dl_signal);
        all(ul_gain_sum, o.ul_gain_sum);
        all(ul_noise, o.ul_noise);
        all(ul_distortion, o.ul_distortion);
        all(dl_gain_sum, o.dl_gain_sum);
        all(dl_distortion, o.dl_distortion);
        all(row_power, o.row_power);
        ce_residual.merge(o.ce_residual);
        ul_residual.merge(o.ul_residual);
        dl_residual.merge(o.dl_residual);
        ul_off_diagonal.merge(o.ul_off_diagonal);
        estimate_power.merge(o.estimate_power);
        ul_distortion_power.merge(o.ul_distortion_power);
        precoder_power.merge(o.precoder_power);
    }
};

/// Runs `trials` full-chain trials and returns the merged accumulator.
inline ChainAccumulator simulate_chain(const ChainSetup& s, std::size_t trials, std::uint64_t seed,
                                       unsigned threads = 0)
{
    if (trials == 0) throw std::invalid_argument("simulate_chain: trials must be positive");
    const ChainAccumulator zero(s.config.k_users, s.config.m);
    return reduce_trials(
        trials, zero,
        [&](ChainAccumulator& acc, std::size_t t) {
            const TrialDraw ce = draw_pilot_phase(s, seed, t);
            acc.add(ce, s.stats.g_ce, run_ul_trial(s, ce, seed, t), run_dl_trial(s, ce, seed, t));
        },
        threads);
}

/// Closed form vs empirical value of one quantity.
struct TermReport
{
    std::string name;
    double closed = 0.0;
    double empirical = 0.0;
    double sigma = 0.0;  ///< Monte Carlo standard error of `empirical`

    double relative_error() const { return std::abs(empirical - closed) / std::abs(closed); }
};

/// Empirical check of a zero-mean quantity (Bussgang residuals, off-diagonals).
struct ZeroCheck
{
    std::string name;
    double magnitude = 0.0;
    double sigma = 0.0;

    bool within(double n_sigma) const { return magnitude <= n_sigma * sigma; }
};

struct ValidationReport
{
    SystemConfig config;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    double tolerance = 0.05;
    std::vector<TermReport> sindr;     ///< ul.k<i>.sindr and dl.k<i>.sindr
    std::vector<TermReport> moments;   ///< individual expectation terms
    std::vector<ZeroCheck> zero_checks;
    bool passed = false;
    std::string worst_sindr;
    std::string worst_moment;

    double max_sindr_error() const
    {
        double e = 0.0;
        for (const auto& t : sindr) e = std::max(e, t.relative_error());
        return e;
    }

    const TermReport& term(const std::string& name) const
    {
        for (const auto& t : sindr)
            if (t.name == name) return t;
        for (const auto& t : moments)
            if (t.name == name) return t;
        throw std::out_of_range("ValidationReport: no term " + name);
    }

    /// Flat key=value text, one entry per line.
    std::string to_text() const
    {
        std::ostringstream os;
        os << std::setprecision(9);
        os << "config.m=" << config.m << "\nconfig.k_users=" << config.k_users << "\nconfig.tau=" << config.tau
           << "\nconfig.bits=" << config.bits << "\nconfig.rho_bs=" << config.rho_bs
           << "\nconfig.rho_ue=" << config.rho_ue << "\ntrials=" << trials << "\nseed=" << seed
           << "\ntolerance=" << tolerance << "\n";
        auto emit = [&os](const TermReport& t) {
            os << t.name << ".closed=" << t.closed << "\n"
               << t.name << ".empirical=" << t.empirical << "\n"
               << t.name << ".rel_error=" << t.relative_error() << "\n"
               << t.name << ".sigma=" << t.sigma << "\n";
        };
        for (const auto& t : sindr) emit(t);
        for (const auto& t : moments) emit(t);
        for (const auto& z : zero_checks)
            os << z.name << ".magnitude=" << z.magnitude << "\n" << z.name << ".sigma=" << z.sigma << "\n";
        os << "worst_sindr=" << worst_sindr << "\nworst_moment=" << worst_moment
           << "\nmax_sindr_rel_error=" << max_sindr_error() << "\npassed=" << (passed ? "true" : "false") << "\n";
        return os.str();
    }
};

struct ValidationOptions
{
    double tolerance = 0.05;
    std::size_t stats_trials = 0;  ///< 0: same as the chain trials
    unsigned threads = 0;
};

namespace detail {

// Standard error of rho * |mean|^2 / (rho * (S - |mean|^2) + N + D) by the
// delta method, ignoring covariances between the terms.
inline double sindr_sigma_ul(double rho, const ComplexMoment& a, const RunningMoment& s, const RunningMoment& n,
                             const RunningMoment& d, double gamma)
{
    const double p = std::norm(a.mean());
    const double den = rho * (s.mean() - p) + n.mean() + d.mean();
    const double dp = 2.0 * std::abs(a.mean()) * a.standard_error();
    const double dg_dp = rho / den + gamma * rho / den;
    const double dg_dden = gamma / den;
    return std::sqrt(std::pow(dg_dp * dp, 2) +
                     std::pow(dg_dden, 2) *
                         (std::pow(rho * s.standard_error(), 2) + std::pow(n.standard_error(), 2) +
                          std::pow(d.standard_error(), 2)));
}

} // namespace detail

/// Builds the report from a finished simulation.
inline ValidationReport make_report(const ChainSetup& s, const ChainAccumulator& acc, std::size_t trials,
                                    std::uint64_t seed, double tolerance)
{
    const auto& c = s.config;
    ValidationReport rep;
    rep.config = c;
    rep.trials = trials;
    rep.seed = seed;
    rep.tolerance = tolerance;

    const auto ul_in = ul_inputs(c, s.stats);
    const auto dl_in = dl_inputs(c, s.stats);
    for (int k = 0; k < c.k_users; ++k)
    {
        const std::string ul = "ul.k" + std::to_string(k);
        const std::string dl = "dl.k" + std::to_string(k);
        const UlMoments cu = closed_form_ul_moments(ul_in, k);
        const DlMoments cd = closed_form_dl_moments(dl_in, k);
        const UlMoments eu{acc.ul_signal[k].mean(), acc.ul_gain_sum[k].mean(), acc.ul_noise[k].mean(),
                           acc.ul_distortion[k].mean()};
        const DlMoments ed{acc.dl_signal[k].mean(), acc.dl_gain_sum[k].mean(), acc.dl_distortion[k].mean()};

        const double gu = sindr_from_moments(eu, c.rho_bs);
        const double gd = sindr_from_moments(ed, c.rho_ue);
        rep.sindr.push_back({ul + ".sindr", sindr_ul_mrc(ul_in, k), gu,
                             detail::sindr_sigma_ul(c.rho_bs, acc.ul_signal[k], acc.ul_gain_sum[k], acc.ul_noise[k],
                                                    acc.ul_distortion[k], gu)});
        const RunningMoment one;  // the unit noise term has no sampling error
        rep.sindr.push_back({dl + ".sindr", sindr_dl_mrt(dl_in, k), gd,
                             detail::sindr_sigma_ul(c.rho_ue, acc.dl_signal[k], acc.dl_gain_sum[k], one,
                                                    acc.dl_distortion[k], gd)});

        rep.moments.push_back({ul + ".signal", std::abs(cu.signal), std::abs(eu.signal), acc.ul_signal[k].standard_error()});
        rep.moments.push_back({ul + ".gain_sum", cu.gain_sum, eu.gain_sum, acc.ul_gain_sum[k].standard_error()});
        rep.moments.push_back({ul + ".noise", cu.noise, eu.noise, acc.ul_noise[k].standard_error()});
        rep.moments.push_back({ul + ".distortion", cu.distortion, eu.distortion, acc.ul_distortion[k].standard_error()});
        rep.moments.push_back({dl + ".signal", std::abs(cd.signal), std::abs(ed.signal), acc.dl_signal[k].standard_error()});
        rep.moments.push_back({dl + ".gain_sum", cd.gain_sum, ed.gain_sum, acc.dl_gain_sum[k].standard_error()});
        rep.moments.push_back({dl + ".distortion", cd.distortion, ed.distortion, acc.dl_distortion[k].standard_error()});
    }
    rep.moments.push_back({"ce.delta", s.stats.delta, acc.estimate_power.mean(), acc.estimate_power.standard_error()});
    rep.moments.push_back({"ul.distortion_per_entry", s.stats.trace_cd_ul / c.m, acc.ul_distortion_power.mean(),
                           acc.ul_distortion_power.standard_error()});
    rep.moments.push_back({"dl.precoder_power", 1.0, acc.precoder_power.mean(), acc.precoder_power.standard_error()});
    double worst_row = 0.0;
    std::size_t worst_row_index = 0;
    for (std::size_t i = 0; i < acc.row_power.size(); ++i)
    {
        const double e = std::abs(acc.row_power[i].mean() * c.m - 1.0);
        if (e >= worst_row)
        {
            worst_row = e;
            worst_row_index = i;
        }
    }
    rep.moments.push_back({"dl.row_power_worst", 1.0 / c.m, acc.row_power[worst_row_index].mean(),
                           acc.row_power[worst_row_index].standard_error()});

    auto zero = [](const std::string& name, const ComplexMoment& m) {
        return ZeroCheck{name, std::abs(m.mean()), m.standard_error()};
    };
    rep.zero_checks.push_back(zero("ce.bussgang_residual", acc.ce_residual));
    rep.zero_checks.push_back(zero("ul.bussgang_residual", acc.ul_residual));
    rep.zero_checks.push_back(zero("dl.bussgang_residual", acc.dl_residual));
    rep.zero_checks.push_back(zero("ul.distortion_off_diagonal", acc.ul_off_diagonal));

    auto worst = [](const std::vector<TermReport>& v) {
        const auto it = std::max_element(v.begin(), v.end(), [](const TermReport& a, const TermReport& b) {
            return a.relative_error() < b.relative_error();
        });
        return it == v.end() ? std::string{} : it->name;
    };
    rep.worst_sindr = worst(rep.sindr);
    rep.worst_moment = worst(rep.moments);
    rep.passed = rep.max_sindr_error() <= tolerance;
    return rep;
}

/// Compares the closed-form SINDRs with the empirical ones for `config`.
/// A tolerance violation is reported through ValidationReport::passed.
inline ValidationReport validate_closed_form(const SystemConfig& config, std::size_t trials, std::uint64_t seed,
                                             const ValidationOptions& options = {})
{
    if (trials == 0) throw std::invalid_argument("validate_closed_form: trials must be positive");
    config.validate();
    StatsOptions so;
    so.trials = std::max<std::size_t>(options.stats_trials == 0 ? trials : options.stats_trials, kMinDistortionTrials);
    so.seed = seed;
    so.threads = options.threads;
    const ChainSetup setup = make_chain_setup(config, so);
    const std::uint64_t chain_seed = stream_seed(seed, Phase::auxiliary, 0);
    const auto acc = simulate_chain(setup, trials, chain_seed, options.threads);
    return make_report(setup, acc, trials, seed, options.tolerance);
}

} // namespace qmimo
