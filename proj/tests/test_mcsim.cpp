// SPDX-License-Identifier: Apache-2.0

#include <catch_amalgamated.hpp>

#include <cmath>

#include "qmimo/mcsim.hpp"

using namespace qmimo;
using Catch::Approx;

namespace {

ChainSetup setup_for(const SystemConfig& c, std::size_t trials = 10000, std::uint64_t seed = 1)
{
    StatsOptions o;
    o.trials = trials;
    o.seed = seed;
    return make_chain_setup(c, o);
}

} // namespace

TEST_CASE("per-trial contributions are reproducible", "[mcsim]")
{
    const auto s = setup_for(SystemConfig{});
    const auto a = draw_pilot_phase(s, 5, 17);
    const auto b = draw_pilot_phase(s, 5, 17);
    CHECK(a.h_hat == b.h_hat);
    const auto ua = run_ul_trial(s, a, 5, 17), ub = run_ul_trial(s, b, 5, 17);
    CHECK(ua.signal == ub.signal);
    CHECK(ua.distortion == ub.distortion);
    const auto da = run_dl_trial(s, a, 5, 17), db = run_dl_trial(s, b, 5, 17);
    CHECK(da.gain_sum == db.gain_sum);
    CHECK(run_ul_trial(s, a, 5, 18).distortion != ua.distortion);
}

TEST_CASE("near-infinite resolution without noise recovers the channel gain", "[mcsim]")
{
    SystemConfig c;
    c.bits = 12;
    c.tau = c.k_users;
    c.rho_bs = 1e8;  // noise power 1e-8 of the signal
    const auto s = setup_for(c);
    const auto acc = simulate_chain(s, 2000, 3);
    for (int k = 0; k < c.k_users; ++k)
        CHECK(std::abs(acc.ul_signal[k].mean()) / (s.stats.g_ul * s.stats.g_ul * c.m) == Approx(1.0).epsilon(0.01));
}

TEST_CASE("precoder normalization and estimate power", "[mcsim]")
{
    const SystemConfig c;
    const auto s = setup_for(c, 100000);
    const auto acc = simulate_chain(s, 100000, 9);
    CHECK(acc.precoder_power.mean() == Approx(1.0).epsilon(0.01));
    CHECK(acc.estimate_power.mean() == Approx(s.stats.delta).epsilon(0.01));
    for (const auto& row : acc.row_power)
        CHECK(std::abs(row.mean() - 1.0 / c.m) < 5.0 * row.standard_error());
}

TEST_CASE("pilot-phase Bussgang residual and off-diagonal distortion vanish", "[mcsim][property]")
{
    for (int b : {1, 2, 3})
    {
        SystemConfig c;
        c.bits = b;
        const auto s = setup_for(c);
        const auto acc = simulate_chain(s, 40000, 11);
        INFO("bits " << b);
        CHECK(std::abs(acc.ce_residual.mean()) < 3.0 * acc.ce_residual.standard_error());
        CHECK(std::abs(acc.ul_off_diagonal.mean()) < 3.0 * acc.ul_off_diagonal.standard_error());
    }
}

TEST_CASE("fine-resolution chain matches the closed forms", "[mcsim]")
{
    SystemConfig c;
    c.bits = 10;
    const auto rep = validate_closed_form(c, 20000, 3, {0.03, 0, 0});
    INFO(rep.to_text());
    CHECK(rep.passed);
    CHECK(rep.max_sindr_error() < 0.03);
}

TEST_CASE("empirical moments at M=16 and 10 bits", "[mcsim]")
{
    SystemConfig c;
    c.m = 16;
    c.bits = 10;
    const auto rep = validate_closed_form(c, 40000, 4);
    for (const auto& t : rep.moments)
    {
        if (t.name.find(".signal") == std::string::npos && t.name.find(".gain_sum") == std::string::npos &&
            t.name.find(".noise") == std::string::npos)
            continue;
        INFO(t.name << " closed " << t.closed << " empirical " << t.empirical);
        CHECK(t.relative_error() < 0.03);
    }
}

TEST_CASE("downlink at 12 bits matches the distortion-free closed form", "[mcsim]")
{
    SystemConfig c;
    c.bits = 12;
    const auto s = setup_for(c);
    const auto acc = simulate_chain(s, 20000, 6);
    const double est = 1.0 + 1.0 / (c.rho_bs * c.tau);
    const double delta = c.k_users * c.m * est;
    const double ideal = c.rho_ue * c.m * c.m / (c.rho_ue * c.k_users * est * c.m + delta);
    for (int k = 0; k < c.k_users; ++k)
    {
        const DlMoments mom{acc.dl_signal[k].mean(), acc.dl_gain_sum[k].mean(), acc.dl_distortion[k].mean()};
        CHECK(sindr_from_moments(mom, c.rho_ue) == Approx(ideal).epsilon(0.03));
    }
}

TEST_CASE("validation report", "[mcsim]")
{
    SystemConfig c;
    c.m = 16;
    c.bits = 2;

    SECTION("zero trials are rejected")
    {
        CHECK_THROWS_AS(validate_closed_form(c, 0, 1), std::invalid_argument);
    }
    SECTION("a coarse one-bit case still produces a complete report")
    {
        c.bits = 1;
        c.tau = c.k_users = 4;
        const auto rep = validate_closed_form(c, 20000, 2);
        CHECK(rep.sindr.size() == 8);
        for (const auto& t : rep.sindr) CHECK(std::isfinite(t.empirical));
        CHECK_FALSE(rep.worst_sindr.empty());
        CHECK_FALSE(rep.worst_moment.empty());
    }
    SECTION("an impossible tolerance fails and names the worst term")
    {
        const auto rep = validate_closed_form(c, 10000, 3, {1e-9, 0, 0});
        CHECK_FALSE(rep.passed);
        const std::string text = rep.to_text();
        CHECK(text.find("passed=false") != std::string::npos);
        CHECK(text.find("worst_sindr=" + rep.worst_sindr) != std::string::npos);
        CHECK(rep.term(rep.worst_sindr).relative_error() == Approx(rep.max_sindr_error()));
    }
    SECTION("key=value text layout")
    {
        const auto rep = validate_closed_form(c, 10000, 3);
        const std::string text = rep.to_text();
        for (const char* key : {"ul.k0.sindr.closed=", "dl.k3.sindr.rel_error=", "ul.k1.distortion.sigma=",
                                "ce.delta.empirical=", "ce.bussgang_residual.magnitude=", "trials=10000"})
            CHECK(text.find(key) != std::string::npos);
    }
    SECTION("independent of thread count")
    {
        const auto one = validate_closed_form(c, 3000, 8, {0.05, 0, 1});
        const auto three = validate_closed_form(c, 3000, 8, {0.05, 0, 3});
        CHECK(one.to_text() == three.to_text());
    }
}
