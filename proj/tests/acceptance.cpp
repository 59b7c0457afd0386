// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion,
// followed by indented detail, and exits non-zero if any criterion fails.
//
//   acceptance            default trial counts (minutes on one core)
//   acceptance --full     1e5 trials for the trend sweeps (tens of minutes)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qmimo/mcsim.hpp"
#include "qmimo/sweep.hpp"

using namespace qmimo;

namespace {

struct Outcome
{
    bool pass = false;
    std::string detail;
};

struct Criterion
{
    int id;
    const char* title;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// 1. Lloyd-Max against the dense-grid oracle.
Outcome quantizer_oracle()
{
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (int b = 1; b <= 3; ++b)
    {
        const auto q = design_lloyd_max(b, 1.0);
        const auto o = oracle::dense_grid_lloyd(b, 1.0, 1e-4, 8.0);
        for (std::size_t i = 0; i < o.labels.size(); ++i) worst = std::max(worst, std::abs(q.labels[i] - o.labels[i]));
        for (std::size_t i = 0; i < o.thresholds.size(); ++i)
            worst = std::max(worst, std::abs(q.thresholds[i + 1] - o.thresholds[i]));
    }
    const auto one = design_lloyd_max(1, 1.0);
    const double r = std::sqrt(2.0 / std::numbers::pi);
    const double one_err = std::max(std::abs(one.labels[0] + r), std::abs(one.labels[1] - r));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {worst <= 1e-4 && one_err <= 1e-6 && secs < 60.0,
            fmt("max |design - oracle| = %.2e (tol 1e-4); 1-bit label error %.2e (tol 1e-6); %.2f s", worst, one_err,
                secs)};
}

// 2. Bussgang gain against the Monte Carlo regression coefficient.
Outcome bussgang_gain()
{
    const SystemConfig cfg;
    const double c = cfg.adc_input_variance();
    bool ok = true;
    std::ostringstream os;
    for (int b = 1; b <= 4; ++b)
    {
        const auto q = matched_quantizer(b, c);
        const double g = gain_scalar(q, c);
        Engine e = make_stream(2, Phase::auxiliary, b);
        ComplexNormal draw(c);
        oracle::MeanSe num, den;
        double cross = 0.0;
        const std::size_t n = 1000000;
        for (std::size_t i = 0; i < n; ++i)
        {
            const cdouble y = draw(e);
            const double a = (quantize(q, y) * std::conj(y)).real();
            const double v = std::norm(y);
            num.add(a);
            den.add(v);
            cross += a * v;
        }
        const double ratio = num.mean() / den.mean();
        const double cov = (cross / n - num.mean() * den.mean()) / n;
        const double se = std::sqrt(num.se() * num.se() - 2.0 * ratio * cov + ratio * ratio * den.se() * den.se()) /
                          den.mean();
        const bool pass = std::abs(g - ratio) < 3.0 * se;
        ok = ok && pass;
        os << fmt("b=%d: analytic %.6f, regression %.6f, |diff|/se = %.2f\n", b, g, ratio, std::abs(g - ratio) / se);
    }
    const double lm = gain_scalar(design_lloyd_max(1, 1.0), 2.0);
    const bool lm_ok = std::abs(lm - 2.0 / std::numbers::pi) < 1e-3;
    os << fmt("1-bit Lloyd-Max labels at c=2: %.6f vs 2/pi = %.6f", lm, 2.0 / std::numbers::pi);
    return {ok && lm_ok, os.str()};
}

// 3. d = Q(y) - G y is uncorrelated with y in every phase.
Outcome distortion_orthogonality()
{
    const SystemConfig cfg;
    struct PhaseCase
    {
        const char* name;
        double var;
    };
    const PhaseCase phases[] = {{"ce", cfg.adc_input_variance()},
                                {"ul", cfg.adc_input_variance()},
                                {"dl", cfg.dac_input_variance()}};
    bool ok = true;
    std::ostringstream os;
    for (const auto& ph : phases)
        for (int b = 1; b <= 3; ++b)
        {
            const auto q = matched_quantizer(b, ph.var);
            const double g = gain_scalar(q, ph.var);
            Engine e = make_stream(3, Phase::auxiliary, 100 * b + ph.name[0]);
            ComplexNormal draw(ph.var);
            ComplexMoment m;
            for (int i = 0; i < 1000000; ++i)
            {
                const cdouble y = draw(e);
                m.add((quantize(q, y) - g * y) * std::conj(y));
            }
            const double mag = std::abs(m.mean()), se = m.standard_error();
            ok = ok && mag < 3.0 * se;
            os << fmt("%s b=%d: |mean d conj(y)| = %.3e, 3 se = %.3e\n", ph.name, b, mag, 3.0 * se);
        }
    // The quantized pilot phase of the full chain has a genuinely Gaussian input.
    SystemConfig c = cfg;
    for (int b = 1; b <= 3; ++b)
    {
        c.bits = b;
        StatsOptions so;
        so.trials = 10000;
        const auto setup = make_chain_setup(c, so);
        const auto acc = simulate_chain(setup, 4000, 33);  // 4000 trials x M tau = 1.0e6 samples
        const double mag = std::abs(acc.ce_residual.mean()), se = acc.ce_residual.standard_error();
        ok = ok && mag < 3.0 * se;
        os << fmt("chain pilot phase b=%d: |mean| = %.3e, 3 se = %.3e\n", b, mag, 3.0 * se);
    }
    std::string s = os.str();
    s.pop_back();
    return {ok, s};
}

// 4. Closed-form SINDRs against the full-chain Monte Carlo.
Outcome closed_form_vs_oracle()
{
    SystemConfig c;  // M=32, K=4, tau=8, rho_BS = rho_UE = 0 dB
    bool ok = true;
    std::ostringstream os;
    for (int b : {1, 2, 3})
    {
        c.bits = b;
        auto rep = validate_closed_form(c, 100000, 2024);
        if (!rep.passed && b == 1)
        {
            os << fmt("b=1 at 1e5 trials: max error %.2f%% in %s; rerunning at 1e6\n", 100 * rep.max_sindr_error(),
                      rep.worst_sindr.c_str());
            rep = validate_closed_form(c, 1000000, 2024);
        }
        double ul = 0.0, dl = 0.0;
        for (const auto& t : rep.sindr)
        {
            double& worst = t.name.rfind("ul.", 0) == 0 ? ul : dl;
            worst = std::max(worst, t.relative_error());
        }
        ok = ok && rep.passed;
        os << fmt("b=%d (%zu trials): max UL error %.2f%%, max DL error %.2f%% (tol 5%%); worst SINDR %s, worst "
                  "moment %s (%.1f%%)\n",
                  b, rep.trials, 100 * ul, 100 * dl, rep.worst_sindr.c_str(), rep.worst_moment.c_str(),
                  100 * rep.term(rep.worst_moment).relative_error());
        const auto& k0u = rep.term("ul.k0.sindr");
        const auto& k0d = rep.term("dl.k0.sindr");
        os << fmt("    UE0: UL closed %.4f empirical %.4f; DL closed %.4f empirical %.4f\n", k0u.closed, k0u.empirical,
                  k0d.closed, k0d.empirical);
    }
    std::string s = os.str();
    s.pop_back();
    return {ok, s};
}

SweepConfig figure_config(Direction d, std::size_t trials)
{
    SweepConfig c;
    c.directions = {d};
    c.bits = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    c.bandwidths_hz = {1e8};
    c.taus = {8, 16, 32, 64};
    c.k_users = 8;
    c.trials = trials;
    c.seed = 2019;
    return c;
}

std::size_t g_trend_trials = 20000;

// 5. Argmax over bits of the sum rate.
Outcome trend_reproduction()
{
    bool ok = true;
    std::ostringstream os;
    os << "trials per point: " << g_trend_trials << ", seed 2019\n";
    for (Direction d : {Direction::uplink, Direction::downlink})
    {
        const auto records = run_sweep(figure_config(d, g_trend_trials));
        os << to_string(d) << " M by b:";
        for (const auto& r : records)
            if (r.tau == 8) os << ' ' << r.m;
        os << '\n';
        for (int tau : {8, 16, 32, 64})
        {
            const int expected = d == Direction::downlink && tau == 8 ? 3 : 2;
            const int got = argmax_bits(records, d, 1e8, tau);
            ok = ok && got == expected;
            os << fmt("%s tau=%2d: argmax b = %d (expected %d)%s;", to_string(d).c_str(), tau, got, expected,
                      got == expected ? "" : " MISMATCH");
            for (const auto& r : records)
                if (r.tau == tau && r.bits <= 5) os << fmt(" b%d %.4f", r.bits, r.sum_rate_bps / 1e9);
            os << " Gbps\n";
        }
    }
    std::string s = os.str();
    s.pop_back();
    return {ok, s};
}

// 6. Antenna budget under the reference envelope.
Outcome antenna_budget()
{
    const PowerModelParams p;
    const double env = envelope_from_reference(10, 1e8, 10, Direction::uplink, p);
    const int m10 = antennas_budget(env, p.p_rf_ul, p_adc(10, 1e8));
    bool monotone = true;
    std::ostringstream os;
    for (Direction d : {Direction::uplink, Direction::downlink})
        for (double bw : {1e8, 4e8, 7e8, 1e9})
        {
            const double e = envelope_from_reference(10, 1e8, 10, d, p);
            int prev = 1 << 30;
            for (int b = 1; b <= 12; ++b)
            {
                const int m = antennas_budget_or_zero(e, p.p_rf(d), p_converter(d, b, bw, p));
                monotone = monotone && m <= prev;
                prev = m;
            }
        }
    os << fmt("M(b=10, B=0.1 GHz) = %d (expected 10); M non-increasing in b for both directions and all B: %s", m10,
              monotone ? "yes" : "no");
    return {m10 == 10 && monotone, os.str()};
}

// 7. Output variance of the rescaled quantizers.
Outcome rescaled_variance()
{
    const SystemConfig cfg;
    bool ok = true;
    double worst = 0.0;
    for (double target : {cfg.adc_input_variance(), cfg.dac_input_variance()})
        for (int b = 1; b <= 12; ++b)
        {
            const auto q = matched_quantizer(b, target);
            Engine e = make_stream(7, Phase::auxiliary, b);
            ComplexNormal draw(target);
            CompensatedSum power;
            const int n = 1000000;
            for (int i = 0; i < n; ++i) power.add(std::norm(quantize(q, draw(e))));
            const double rel = std::abs(power.value() / n / target - 1.0);
            worst = std::max(worst, rel);
            ok = ok && rel < 5e-3;
        }
    return {ok, fmt("b = 1..12, targets %.3g (ADC) and %.5g (DAC): worst relative deviation %.3f%% (tol 0.5%%)",
                    cfg.adc_input_variance(), cfg.dac_input_variance(), 100 * worst)};
}

// 8. Pilot orthogonality over the sweep grid.
Outcome pilot_orthogonality()
{
    double worst = 0.0;
    int cases = 0;
    for (int tau : {8, 16, 32, 64})
        for (int k = 1; k <= std::min(tau, 16); ++k)
        {
            worst = std::max(worst, orthogonality_error(dft_pilots(tau, k)));
            ++cases;
        }
    return {worst < 1e-9, fmt("%d (tau, K) pairs, max ||P^H P - tau I||_F = %.2e (tol 1e-9)", cases, worst)};
}

// 9. Two identical runs give identical bytes.
Outcome determinism()
{
    auto c = figure_config(Direction::uplink, 10000);
    auto csv = [](const std::vector<SweepRecord>& rs) {
        std::string s = std::string(kCsvHeader) + "\n";
        for (const auto& r : rs) s += csv_row(r) + "\n";
        return s;
    };
    c.threads = 1;
    const std::string a = csv(run_sweep(c));
    c.threads = 2;
    const std::string b = csv(run_sweep(c));
    return {a == b, fmt("uplink reference sweep (%zu trials, 48 points) run twice with 1 and 2 threads: %zu bytes, %s",
                        c.trials, a.size(), a == b ? "identical" : "DIFFERENT")};
}

} // namespace

int main(int argc, char** argv)
{
    for (int i = 1; i < argc; ++i)
        if (std::strcmp(argv[i], "--full") == 0) g_trend_trials = 100000;

    const std::vector<Criterion> criteria{
        {1, "quantizer oracle equivalence", quantizer_oracle},
        {2, "Bussgang gain", bussgang_gain},
        {3, "distortion orthogonality", distortion_orthogonality},
        {4, "closed form vs full-chain oracle", closed_form_vs_oracle},
        {5, "trend reproduction (argmax over bits)", trend_reproduction},
        {6, "antenna budget", antenna_budget},
        {7, "rescaled output variance", rescaled_variance},
        {8, "pilot orthogonality", pilot_orthogonality},
        {9, "determinism", determinism},
    };

    int failed = 0;
    for (const auto& c : criteria)
    {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try
        {
            o = c.run();
        }
        catch (const std::exception& e)
        {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%s] %d. %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.title, secs);
        std::istringstream lines(o.detail);
        for (std::string line; std::getline(lines, line);) std::printf("       %s\n", line.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
