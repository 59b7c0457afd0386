// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "qmimo/rates.hpp"

using namespace qmimo;
using Catch::Approx;

namespace {

BussgangStats ideal_stats(int k, int m, int tau, double rho)
{
    BussgangStats s;
    s.g_ce = s.g_ul = s.g_dl = 1.0;
    s.a_k.assign(k, 0.0);
    s.b_k.assign(k, 0.0);
    s.delta = k * m * (1.0 + 1.0 / (rho * tau));
    return s;
}

BussgangStats sample_stats()
{
    BussgangStats s;
    s.g_ce = 0.88;
    s.g_ul = 0.87;
    s.g_dl = 0.86;
    s.trace_cd_ul = 18.7;
    s.trace_cd_dl = 0.12;
    s.a_k = {120.0, 118.0, 121.5, 119.0};
    s.b_k = {70.0, 69.0, 71.0, 70.5};
    s.delta = 130.0;
    return s;
}

QuantizerSpec labels_times(QuantizerSpec q, double s)
{
    for (auto& l : q.labels) l *= s;
    return q;
}

} // namespace

TEST_CASE("uplink SINDR in the distortion-free limit", "[rates]")
{
    const int m = 64, k = 8, tau = 16;
    const double rho = 2.0;
    const SindrInputsUL in{m, k, tau, rho, ideal_stats(k, m, tau, rho)};
    const double expected = rho * m * m / ((rho * k + 1.0) * (1.0 + 1.0 / (rho * tau)) * m);
    for (int u = 0; u < k; ++u) CHECK(sindr_ul_mrc(in, u) == Approx(expected).epsilon(1e-14));
}

TEST_CASE("downlink SINDR in the distortion-free limit", "[rates]")
{
    const int m = 64, k = 8, tau = 16;
    const double rho_bs = 2.0, rho_ue = 5.0;
    const auto s = ideal_stats(k, m, tau, rho_bs);
    const SindrInputsDL in{m, k, tau, rho_bs, rho_ue, s};
    const double expected = rho_ue * m * m / (rho_ue * k * (1.0 + 1.0 / (rho_bs * tau)) * m + s.delta);
    CHECK(sindr_dl_mrt(in, 3) == Approx(expected).epsilon(1e-14));
}

TEST_CASE("uplink SINDR grows linearly in M", "[rates]")
{
    const auto s = ideal_stats(4, 1, 8, 1.0);
    const double g1 = sindr_ul_mrc({1000, 4, 8, 1.0, s}, 0);
    const double g2 = sindr_ul_mrc({2000, 4, 8, 1.0, s}, 0);
    CHECK(g2 / g1 == Approx(2.0).epsilon(1e-12));
}

TEST_CASE("uplink SINDR is strictly increasing in M", "[rates][property]")
{
    const auto s = sample_stats();
    for (int tau : {4, 8, 32})
        for (double rho : {0.1, 1.0, 100.0})
        {
            double prev = 0.0;
            for (int m = 1; m <= 512; m *= 2)
            {
                const double g = sindr_ul_mrc({m, 4, tau, rho, s}, 2);
                CHECK(g > prev);
                prev = g;
            }
        }
}

TEST_CASE("downlink SINDR vanishes with the UE SNR", "[rates]")
{
    const auto s = sample_stats();
    CHECK(sindr_dl_mrt({32, 4, 8, 1.0, 0.0, s}, 0) == 0.0);
    CHECK(sindr_dl_mrt({32, 4, 8, 1.0, 1e-9, s}, 0) < 1e-8);
}

TEST_CASE("closed-form moments reproduce the closed-form SINDRs", "[rates]")
{
    const auto s = sample_stats();
    for (int m : {8, 32, 100})
        for (double rho : {0.3, 1.0, 10.0})
        {
            const SindrInputsUL ul{m, 4, 8, rho, s};
            const SindrInputsDL dl{m, 4, 8, rho, 2.0 * rho, s};
            for (int k = 0; k < 4; ++k)
            {
                CHECK(sindr_from_moments(closed_form_ul_moments(ul, k), rho) ==
                      Approx(sindr_ul_mrc(ul, k)).epsilon(1e-12));
                CHECK(sindr_from_moments(closed_form_dl_moments(dl, k), 2.0 * rho) ==
                      Approx(sindr_dl_mrt(dl, k)).epsilon(1e-12));
            }
        }
}

TEST_CASE("moment inputs are checked", "[rates]")
{
    UlMoments bad{{10.0, 0.0}, 50.0, 1.0, 1.0};  // sum of gains below |signal|^2
    CHECK_THROWS_AS(sindr_from_moments(bad, 1.0), NumericalError);
    DlMoments ok{{1.0, 0.0}, 1.0, 0.0};
    CHECK(sindr_from_moments(ok, 2.0) == Approx(2.0));
}

TEST_CASE("non-finite terms are reported term by term", "[rates]")
{
    auto s = sample_stats();
    s.a_k[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH(sindr_ul_mrc({32, 4, 8, 1.0, s}, 1),
                      Catch::Matchers::ContainsSubstring("estimate_distortion=nan"));
    CHECK_THROWS_AS(sindr_ul_mrc({32, 4, 8, 1.0, s}, 4), std::out_of_range);
    CHECK_THROWS_AS(sindr_ul_mrc({32, 4, 2, 1.0, s}, 0), std::invalid_argument);
}

TEST_CASE("sum rate", "[rates]")
{
    CHECK(sum_rate(1e8, {0.0, 0.0, 0.0}) == 0.0);
    CHECK(sum_rate(1.0, {1.0, 1.0}) == Approx(2.0));
    CHECK(sum_rate(2e8, {3.0, 7.0}) == Approx(2.0 * sum_rate(1e8, {3.0, 7.0})));
    CHECK_THROWS_AS(sum_rate(1.0, {-0.1}), std::invalid_argument);
    CHECK_THROWS_AS(sum_rate(0.0, {1.0}), std::invalid_argument);
}

TEST_CASE("pilot overhead factor", "[rates]")
{
    CHECK(overhead_factor(8, 8) == 0.0);
    CHECK(overhead_factor(8, 80) == Approx(0.9));
    CHECK_THROWS_AS(overhead_factor(9, 8), std::invalid_argument);
    CHECK_THROWS_AS(overhead_factor(0, 8), std::invalid_argument);
}

TEST_CASE("SINDRs under a rescaling of the data-phase labels", "[rates][property]")
{
    SystemConfig c;
    c.m = 16;
    c.bits = 2;
    const auto base = make_quantizers(c);
    StatsOptions o;
    o.trials = 10000;

    std::vector<double> ul, dl;
    for (double s : {0.5, 1.0, 2.0})
    {
        const QuantizerSet specs{base.ce, labels_times(base.ul, s), labels_times(base.dl, s)};
        const auto stats = assemble_stats(c, specs, o);
        ul.push_back(sindr_ul_mrc(ul_inputs(c, stats), 0));
        // Scaling the DAC labels by s scales the radiated power by s^2, which
        // is the same as scaling rho_UE.
        auto scaled_snr = c;
        scaled_snr.rho_ue = c.rho_ue / (s * s);
        dl.push_back(sindr_dl_mrt(dl_inputs(scaled_snr, stats), 0));
    }
    for (std::size_t i = 1; i < ul.size(); ++i)
    {
        CHECK(ul[i] == Approx(ul[0]).epsilon(1e-10));
        CHECK(dl[i] == Approx(dl[0]).epsilon(1e-10));
    }
}
