// SPDX-License-Identifier: Apache-2.0
//
// qmimo_sweep: sum rate versus converter resolution under a power envelope.
//
//   qmimo_sweep --config configs/fig1_uplink.json --out fig1.csv
//   qmimo_sweep --direction dl --bits 1,2,3,4 --tau 8,16 --trials 20000 --out dl.csv
//   qmimo_sweep gnuplot --csv fig1.csv --prefix fig1
//
// Exit status: 0 success, 1 closed-form validation failed, 2 configuration
// or I/O error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qmimo/sweep.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitConfig = 2;

// Rough single-thread throughput of the quantize-and-accumulate inner loop.
constexpr double kQuantizerEvalsPerSecond = 4e7;

void print_antenna_rows(const qmimo::SweepConfig& c)
{
    for (auto d : c.directions)
        for (double bw : c.bandwidths_hz)
        {
            const double p_hw = qmimo::envelope_watts(c, d);
            std::cerr << "M by b (" << qmimo::to_string(d) << ", B=" << qmimo::format_g9(bw / 1e9)
                      << " GHz, P_HW=" << qmimo::format_g9(p_hw) << " W):";
            for (int b : c.bits)
                std::cerr << ' ' << b << ':'
                          << qmimo::antennas_budget_or_zero(p_hw, c.power.p_rf(d),
                                                            qmimo::p_converter(d, b, bw, c.power));
            std::cerr << '\n';
        }
}

void print_argmax(const std::vector<qmimo::SweepRecord>& records, const qmimo::SweepConfig& c)
{
    for (auto d : c.directions)
        for (double bw : c.bandwidths_hz)
            for (int tau : c.taus)
                std::cerr << "argmax b (" << qmimo::to_string(d) << ", B=" << qmimo::format_g9(bw / 1e9)
                          << " GHz, tau=" << tau << "): " << qmimo::argmax_bits(records, d, bw, tau) << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sum rate of quantized massive MIMO versus converter resolution"};
    app.set_version_flag("--version", "qmimo_sweep 1.0");

    std::string config_path, direction, out_path;
    std::vector<int> bits, taus;
    std::vector<double> bandwidths_ghz;
    std::size_t trials = 0, validate_trials = 0;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool validate = false, quiet = false;

    app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("--direction", direction, "ul, dl or both")->check(CLI::IsMember({"ul", "dl", "both"}));
    app.add_option("--bits", bits, "resolutions, e.g. 1,2,3")->delimiter(',');
    app.add_option("--bandwidth", bandwidths_ghz, "bandwidths in GHz, e.g. 0.1,0.4")->delimiter(',');
    app.add_option("--tau", taus, "pilot lengths, e.g. 8,16")->delimiter(',');
    app.add_option("--trials", trials, "Monte Carlo trials for the distortion moments");
    app.add_option("--seed", seed, "master seed");
    app.add_flag("--validate", validate, "cross-check every point against the full-chain Monte Carlo");
    app.add_option("--validate-trials", validate_trials, "trials of the full-chain check");
    app.add_option("--threads", threads, "worker threads (0: all cores)");
    app.add_option("--out", out_path, "CSV output path (stdout when omitted)");
    app.add_flag("-q,--quiet", quiet, "no progress output");

    auto* plot = app.add_subcommand("gnuplot", "split a sweep CSV into per-curve two-column data files");
    std::string plot_csv, plot_prefix = "curve";
    plot->add_option("--csv", plot_csv, "sweep CSV")->required()->check(CLI::ExistingFile);
    plot->add_option("--prefix", plot_prefix, "output file prefix");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }

    if (*plot)
    {
        try
        {
            for (const auto& p : qmimo::write_gnuplot(qmimo::read_csv(plot_csv), plot_prefix)) std::cout << p << '\n';
            return kExitOk;
        }
        catch (const std::exception& e)
        {
            std::cerr << "error: " << e.what() << '\n';
            return kExitConfig;
        }
    }

    qmimo::SweepConfig config;
    try
    {
        if (!config_path.empty()) config = qmimo::load_config(config_path);
        if (!direction.empty()) config.directions = qmimo::detail::parse_directions(direction);
        if (!bits.empty()) config.bits = bits;
        if (!bandwidths_ghz.empty())
        {
            config.bandwidths_hz.clear();
            for (double g : bandwidths_ghz) config.bandwidths_hz.push_back(g * 1e9);
        }
        if (!taus.empty()) config.taus = taus;
        if (app.count("--trials")) config.trials = trials;
        if (app.count("--seed")) config.seed = seed;
        if (validate) config.validation.enabled = true;
        if (app.count("--validate-trials")) config.validation.trials = validate_trials;
        config.threads = threads;
        config.validate();
    }
    catch (const std::exception& e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    const double evals = qmimo::sweep_cost(config);
    const unsigned workers = threads == 0 ? qmimo::default_threads() : threads;
    if (!quiet)
    {
        std::fprintf(stderr, "cost estimate: %.3g quantizer evaluations, about %.0f s on %u thread(s)\n", evals,
                     evals / (kQuantizerEvalsPerSecond * workers), workers);
        print_antenna_rows(config);
    }

    std::vector<qmimo::SweepRecord> records;
    try
    {
        records = qmimo::run_sweep(config, [&](const qmimo::SweepRecord& r) {
            if (quiet) return;
            std::fprintf(stderr, "%s b=%d B=%.3g GHz tau=%d M=%d ", qmimo::to_string(r.direction).c_str(), r.bits,
                         r.bandwidth_hz / 1e9, r.tau, r.m);
            if (r.skipped())
                std::fprintf(stderr, "skipped\n");
            else
                std::fprintf(stderr, "R=%.4g Gbps%s\n", r.sum_rate_bps / 1e9,
                             r.validation_passed ? (*r.validation_passed ? " [closed form ok]"
                                                                         : " [closed form MISMATCH]")
                                                 : "");
        });
        if (out_path.empty())
        {
            std::cout << qmimo::kCsvHeader << '\n';
            for (const auto& r : records) std::cout << qmimo::csv_row(r) << '\n';
        }
        else
        {
            qmimo::write_csv(records, out_path, config);
        }
    }
    catch (const qmimo::ConfigError& e)
    {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }
    catch (const std::exception& e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }

    if (!quiet) print_argmax(records, config);

    bool failed = false;
    for (const auto& r : records)
        if (r.validation_passed && !*r.validation_passed)
        {
            failed = true;
            std::cerr << "validation failed: " << qmimo::to_string(r.direction) << " b=" << r.bits
                      << " tau=" << r.tau << ", largest error in " << r.validation_worst << '\n';
        }
    return failed ? kExitValidation : kExitOk;
}
