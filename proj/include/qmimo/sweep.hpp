// SPDX-License-Identifier: Apache-2.0
//
// Configuration-driven sweep over (direction, bandwidth, pilot length, bits)
// under a fixed hardware power envelope, plus the CSV and gnuplot writers.
//
// Config files are JSON objects. Every key is optional; an empty file (or
// "{}") gives the default uplink setup. Schema:
//
//   direction          "ul" | "dl" | "both"
//   bits               [int]        resolutions, 1..12
//   bandwidth_ghz      [number]
//   tau                [int]        pilot lengths, each >= k_users
//   k_users            int
//   trials             int          Monte Carlo trials for the distortion moments
//   seed               int
//   coherence_symbols  int          0 disables the 1 - tau/T post-multiplier
//   direct_b_k         bool
//   power              { v_dd, l_min, f_cor, i_0, c_p, p_rf_ul, p_rf_dl, p_hw }
//   envelope           { bits_ref, bandwidth_ghz_ref, count_ref }
//   link_budget        { p_ue_dbm, p_bs_dbm, alpha, distance_m, noise_figure_db }
//   validate           { enabled, trials, tolerance }
//
// power.p_hw (watts) overrides the envelope rule when present.

#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmimo/bussgang.hpp"
#include "qmimo/mcsim.hpp"
#include "qmimo/rates.hpp"
#include "qmimo/syspower.hpp"
#include "qmimo/system.hpp"

namespace qmimo {

class ConfigError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

struct EnvelopeRule
{
    int bits_ref = 10;
    double bandwidth_ref_hz = 1e8;
    int count_ref = 10;
};

struct ValidationSettings
{
    bool enabled = false;
    std::size_t trials = 100000;
    double tolerance = 0.05;
};

struct SweepConfig
{
    std::vector<Direction> directions{Direction::uplink};
    std::vector<int> bits{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    std::vector<double> bandwidths_hz{1e8};
    std::vector<int> taus{8, 16, 32, 64};
    int k_users = 8;
    std::size_t trials = 100000;
    std::uint64_t seed = 1;
    int coherence_symbols = 0;
    bool direct_b_k = false;
    PowerModelParams power;
    std::optional<double> p_hw;
    EnvelopeRule envelope;
    double p_ue_dbm = 20.0;
    double p_bs_dbm = 30.0;
    double alpha = 4.0;
    double distance_m = 100.0;
    double noise_figure_db = 13.0;
    ValidationSettings validation;
    unsigned threads = 0;

    LinkBudget link_budget() const
    {
        LinkBudget b;
        b.p_ue_dbm = p_ue_dbm;
        b.p_bs_dbm = p_bs_dbm;
        b.alpha = alpha;
        b.distances_m.assign(static_cast<std::size_t>(std::max(k_users, 1)), distance_m);
        b.noise_figure_db = noise_figure_db;
        return b;
    }

    void validate() const
    {
        auto fail = [](const std::string& m) { throw ConfigError(m); };
        if (directions.empty()) fail("direction: at least one direction required");
        if (bits.empty()) fail("bits: list is empty");
        for (int b : bits)
            if (b < 1 || b > 12) fail("bits: " + std::to_string(b) + " outside [1, 12]");
        if (bandwidths_hz.empty()) fail("bandwidth_ghz: list is empty");
        for (double b : bandwidths_hz)
            if (!(b > 0.0)) fail("bandwidth_ghz: values must be positive");
        if (taus.empty()) fail("tau: list is empty");
        if (k_users < 1) fail("k_users: must be >= 1");
        for (int t : taus)
            if (t < k_users)
                fail("tau: " + std::to_string(t) + " is shorter than k_users = " + std::to_string(k_users));
        if (trials < kMinDistortionTrials) fail("trials: must be >= " + std::to_string(kMinDistortionTrials));
        if (coherence_symbols < 0) fail("coherence_symbols: must be >= 0");
        if (coherence_symbols > 0)
            for (int t : taus)
                if (t > coherence_symbols) fail("coherence_symbols: shorter than tau = " + std::to_string(t));
        try
        {
            power.validate();
            link_budget().validate();
        }
        catch (const std::invalid_argument& e)
        {
            fail(e.what());
        }
        if (p_hw && !(*p_hw > 0.0)) fail("power.p_hw: must be positive");
        if (envelope.bits_ref < 1 || !(envelope.bandwidth_ref_hz > 0.0) || envelope.count_ref < 1)
            fail("envelope: bits_ref, bandwidth_ghz_ref and count_ref must be positive");
        if (validation.trials == 0) fail("validate.trials: must be positive");
        if (!(validation.tolerance > 0.0)) fail("validate.tolerance: must be positive");
    }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& known, const std::string& where)
{
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : obj.items())
        if (!known.count(key)) throw ConfigError("unknown key '" + where + key + "'");
}

template <class T>
void read_key(const nlohmann::json& obj, const char* key, T& out, const std::string& where)
{
    if (!obj.contains(key)) return;
    try
    {
        out = obj.at(key).get<T>();
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError("key '" + where + key + "': " + e.what());
    }
}

inline std::vector<Direction> parse_directions(const std::string& s)
{
    if (s == "both") return {Direction::uplink, Direction::downlink};
    try
    {
        return {parse_direction(s)};
    }
    catch (const std::invalid_argument&)
    {
        throw ConfigError("direction: '" + s + "' is not ul, dl or both");
    }
}

inline std::string directions_name(const std::vector<Direction>& d)
{
    if (d.size() == 2) return "both";
    return d.empty() ? "" : to_string(d.front());
}

} // namespace detail

inline SweepConfig parse_config(const nlohmann::json& j)
{
    using detail::read_key;
    SweepConfig c;
    if (j.is_null()) return c;
    detail::reject_unknown(j,
                           {"direction", "bits", "bandwidth_ghz", "tau", "k_users", "trials", "seed",
                            "coherence_symbols", "direct_b_k", "power", "envelope", "link_budget", "validate"},
                           "");
    std::string direction;
    read_key(j, "direction", direction, "");
    if (!direction.empty()) c.directions = detail::parse_directions(direction);
    read_key(j, "bits", c.bits, "");
    if (j.contains("bandwidth_ghz"))
    {
        std::vector<double> ghz;
        read_key(j, "bandwidth_ghz", ghz, "");
        c.bandwidths_hz.clear();
        for (double g : ghz) c.bandwidths_hz.push_back(g * 1e9);
    }
    read_key(j, "tau", c.taus, "");
    read_key(j, "k_users", c.k_users, "");
    read_key(j, "trials", c.trials, "");
    read_key(j, "seed", c.seed, "");
    read_key(j, "coherence_symbols", c.coherence_symbols, "");
    read_key(j, "direct_b_k", c.direct_b_k, "");

    if (j.contains("power"))
    {
        const auto& p = j.at("power");
        detail::reject_unknown(p, {"v_dd", "l_min", "f_cor", "i_0", "c_p", "p_rf_ul", "p_rf_dl", "p_hw"}, "power.");
        read_key(p, "v_dd", c.power.v_dd, "power.");
        read_key(p, "l_min", c.power.l_min, "power.");
        read_key(p, "f_cor", c.power.f_cor, "power.");
        read_key(p, "i_0", c.power.i_0, "power.");
        read_key(p, "c_p", c.power.c_p, "power.");
        read_key(p, "p_rf_ul", c.power.p_rf_ul, "power.");
        read_key(p, "p_rf_dl", c.power.p_rf_dl, "power.");
        if (p.contains("p_hw"))
        {
            double w = 0.0;
            read_key(p, "p_hw", w, "power.");
            c.p_hw = w;
        }
    }
    if (j.contains("envelope"))
    {
        const auto& e = j.at("envelope");
        detail::reject_unknown(e, {"bits_ref", "bandwidth_ghz_ref", "count_ref"}, "envelope.");
        read_key(e, "bits_ref", c.envelope.bits_ref, "envelope.");
        double ghz = c.envelope.bandwidth_ref_hz / 1e9;
        read_key(e, "bandwidth_ghz_ref", ghz, "envelope.");
        c.envelope.bandwidth_ref_hz = ghz * 1e9;
        read_key(e, "count_ref", c.envelope.count_ref, "envelope.");
    }
    if (j.contains("link_budget"))
    {
        const auto& l = j.at("link_budget");
        detail::reject_unknown(l, {"p_ue_dbm", "p_bs_dbm", "alpha", "distance_m", "noise_figure_db"}, "link_budget.");
        read_key(l, "p_ue_dbm", c.p_ue_dbm, "link_budget.");
        read_key(l, "p_bs_dbm", c.p_bs_dbm, "link_budget.");
        read_key(l, "alpha", c.alpha, "link_budget.");
        read_key(l, "distance_m", c.distance_m, "link_budget.");
        read_key(l, "noise_figure_db", c.noise_figure_db, "link_budget.");
    }
    if (j.contains("validate"))
    {
        const auto& v = j.at("validate");
        detail::reject_unknown(v, {"enabled", "trials", "tolerance"}, "validate.");
        read_key(v, "enabled", c.validation.enabled, "validate.");
        read_key(v, "trials", c.validation.trials, "validate.");
        read_key(v, "tolerance", c.validation.tolerance, "validate.");
    }
    c.validate();
    return c;
}

inline SweepConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return parse_config(nullptr);
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(text);
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw ConfigError(path + ": " + e.what());
    }
    return parse_config(j);
}

/// The fully resolved configuration, in the same schema load_config reads.
inline nlohmann::json to_json(const SweepConfig& c)
{
    nlohmann::json j;
    j["direction"] = detail::directions_name(c.directions);
    j["bits"] = c.bits;
    std::vector<double> ghz;
    for (double b : c.bandwidths_hz) ghz.push_back(b / 1e9);
    j["bandwidth_ghz"] = ghz;
    j["tau"] = c.taus;
    j["k_users"] = c.k_users;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["coherence_symbols"] = c.coherence_symbols;
    j["direct_b_k"] = c.direct_b_k;
    j["power"] = {{"v_dd", c.power.v_dd},       {"l_min", c.power.l_min},     {"f_cor", c.power.f_cor},
                  {"i_0", c.power.i_0},         {"c_p", c.power.c_p},         {"p_rf_ul", c.power.p_rf_ul},
                  {"p_rf_dl", c.power.p_rf_dl}};
    if (c.p_hw) j["power"]["p_hw"] = *c.p_hw;
    j["envelope"] = {{"bits_ref", c.envelope.bits_ref},
                     {"bandwidth_ghz_ref", c.envelope.bandwidth_ref_hz / 1e9},
                     {"count_ref", c.envelope.count_ref}};
    j["link_budget"] = {{"p_ue_dbm", c.p_ue_dbm},
                        {"p_bs_dbm", c.p_bs_dbm},
                        {"alpha", c.alpha},
                        {"distance_m", c.distance_m},
                        {"noise_figure_db", c.noise_figure_db}};
    j["validate"] = {{"enabled", c.validation.enabled},
                     {"trials", c.validation.trials},
                     {"tolerance", c.validation.tolerance}};
    return j;
}

/// count_ref * (P_RF + 2 P_conv(bits_ref, bandwidth_ref)).
inline double envelope_from_reference(int bits_ref, double bandwidth_ref_hz, int count_ref, Direction d,
                                      const PowerModelParams& params = {})
{
    if (count_ref < 1) throw std::invalid_argument("envelope_from_reference: count_ref must be >= 1");
    return count_ref * (params.p_rf(d) + 2.0 * p_converter(d, bits_ref, bandwidth_ref_hz, params));
}

inline double envelope_watts(const SweepConfig& c, Direction d)
{
    if (c.p_hw) return *c.p_hw;
    return envelope_from_reference(c.envelope.bits_ref, c.envelope.bandwidth_ref_hz, c.envelope.count_ref, d,
                                   c.power);
}

struct SweepRecord
{
    Direction direction = Direction::uplink;
    int bits = 0;
    double bandwidth_hz = 0.0;
    int tau = 0;
    int m = 0;                  ///< 0 marks an infeasible, skipped point
    std::vector<double> sindr;
    double sum_rate_bps = 0.0;
    double g_ce = 0.0;
    double g_phase = 0.0;       ///< g_ul or g_dl
    double trace_cd = 0.0;      ///< trace of the data-phase distortion covariance
    double delta = 0.0;
    double rho_bs = 0.0;
    double rho_ue = 0.0;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    std::optional<bool> validation_passed;
    std::string validation_worst;

    bool skipped() const { return m == 0; }
    double sindr_min() const { return sindr.empty() ? 0.0 : *std::min_element(sindr.begin(), sindr.end()); }
    double sindr_max() const { return sindr.empty() ? 0.0 : *std::max_element(sindr.begin(), sindr.end()); }
};

/// Total quantizer evaluations a sweep will perform; a rough cost proxy.
inline double sweep_cost(const SweepConfig& c)
{
    double ops = 0.0;
    for (Direction d : c.directions)
        for (double bw : c.bandwidths_hz)
        {
            const double p_hw = envelope_watts(c, d);
            for (int tau : c.taus)
                for (int b : c.bits)
                {
                    const int m = antennas_budget_or_zero(p_hw, c.power.p_rf(d), p_converter(d, b, bw, c.power));
                    const double stats = static_cast<double>(c.trials) * m * (tau + 2.0);
                    const double chain =
                        c.validation.enabled ? static_cast<double>(c.validation.trials) * m * (tau + 2.0) : 0.0;
                    ops += stats + chain;
                }
        }
    return ops;
}

/// Evaluates one (direction, bits, bandwidth, tau) point.
inline SweepRecord evaluate_point(const SweepConfig& c, Direction d, int bits, double bandwidth_hz, int tau)
{
    SweepRecord r;
    r.direction = d;
    r.bits = bits;
    r.bandwidth_hz = bandwidth_hz;
    r.tau = tau;
    r.trials = c.trials;
    r.seed = c.seed;
    const LinkBudget budget = c.link_budget();
    r.rho_bs = snr_linear(Direction::uplink, budget, bandwidth_hz);
    r.rho_ue = snr_linear(Direction::downlink, budget, bandwidth_hz);
    r.m = antennas_budget_or_zero(envelope_watts(c, d), c.power.p_rf(d), p_converter(d, bits, bandwidth_hz, c.power));
    if (r.skipped()) return r;

    SystemConfig sc;
    sc.m = r.m;
    sc.k_users = c.k_users;
    sc.tau = tau;
    sc.bits = bits;
    sc.bandwidth_hz = bandwidth_hz;
    sc.rho_bs = r.rho_bs;
    sc.rho_ue = r.rho_ue;
    const QuantizerSet specs = make_quantizers(sc);
    StatsOptions so;
    so.trials = c.trials;
    so.seed = c.seed;
    so.direct_b_k = c.direct_b_k;
    so.threads = c.threads;
    const BussgangStats stats = assemble_stats(sc, specs, so);

    r.g_ce = stats.g_ce;
    r.delta = stats.delta;
    if (d == Direction::uplink)
    {
        r.sindr = sindrs_ul(ul_inputs(sc, stats));
        r.g_phase = stats.g_ul;
        r.trace_cd = stats.trace_cd_ul;
    }
    else
    {
        r.sindr = sindrs_dl(dl_inputs(sc, stats));
        r.g_phase = stats.g_dl;
        r.trace_cd = stats.trace_cd_dl;
    }
    r.sum_rate_bps = sum_rate(bandwidth_hz, r.sindr);
    if (c.coherence_symbols > 0) r.sum_rate_bps *= overhead_factor(tau, c.coherence_symbols);

    if (c.validation.enabled)
    {
        ValidationOptions vo;
        vo.tolerance = c.validation.tolerance;
        vo.stats_trials = c.trials;
        vo.threads = c.threads;
        const auto rep = validate_closed_form(sc, c.validation.trials, c.seed, vo);
        const std::string prefix = d == Direction::uplink ? "ul." : "dl.";
        double worst = 0.0;
        for (const auto& t : rep.sindr)
            if (t.name.rfind(prefix, 0) == 0 && t.relative_error() >= worst)
            {
                worst = t.relative_error();
                r.validation_worst = t.name;
            }
        r.validation_passed = worst <= c.validation.tolerance;
    }
    return r;
}

inline bool record_order(const SweepRecord& a, const SweepRecord& b)
{
    return std::tie(a.direction, a.bandwidth_hz, a.tau, a.bits) < std::tie(b.direction, b.bandwidth_hz, b.tau, b.bits);
}

/// All records of the sweep, sorted by (direction, bandwidth, tau, bits).
template <class Progress>
std::vector<SweepRecord> run_sweep(const SweepConfig& c, Progress&& progress)
{
    c.validate();
    std::vector<SweepRecord> out;
    for (Direction d : c.directions)
        for (double bw : c.bandwidths_hz)
            for (int tau : c.taus)
                for (int b : c.bits)
                {
                    out.push_back(evaluate_point(c, d, b, bw, tau));
                    progress(out.back());
                }
    std::stable_sort(out.begin(), out.end(), record_order);
    return out;
}

inline std::vector<SweepRecord> run_sweep(const SweepConfig& c)
{
    return run_sweep(c, [](const SweepRecord&) {});
}

inline std::string format_g9(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline constexpr const char* kCsvHeader =
    "direction,b,bandwidth_hz,tau,m,sum_rate_bps,sindr_min,sindr_max,g_ce,g_phase,trace_cd,delta,trials,seed";

inline std::string csv_row(const SweepRecord& r)
{
    std::ostringstream os;
    os << to_string(r.direction) << ',' << r.bits << ',' << format_g9(r.bandwidth_hz) << ',' << r.tau << ',' << r.m
       << ',';
    if (r.skipped())
        os << "skipped,,,,,,,";
    else
        os << format_g9(r.sum_rate_bps) << ',' << format_g9(r.sindr_min()) << ',' << format_g9(r.sindr_max()) << ','
           << format_g9(r.g_ce) << ',' << format_g9(r.g_phase) << ',' << format_g9(r.trace_cd) << ','
           << format_g9(r.delta) << ',';
    os << r.trials << ',' << r.seed;
    return os.str();
}

/// Writes `path` and its sidecar `path.meta.json` with the resolved config.
inline void write_csv(const std::vector<SweepRecord>& records, const std::string& path,
                      const std::optional<SweepConfig>& config = std::nullopt)
{
    if (records.empty()) throw std::invalid_argument("write_csv: no records");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_csv: cannot open '" + path + "' for writing");
    out << kCsvHeader << '\n';
    for (const auto& r : records) out << csv_row(r) << '\n';
    if (!out) throw std::runtime_error("write_csv: write to '" + path + "' failed");

    if (config)
    {
        nlohmann::json meta;
        meta["config"] = to_json(*config);
        meta["columns"] = kCsvHeader;
        meta["rows"] = records.size();
        std::ofstream side(path + ".meta.json", std::ios::binary);
        if (!side) throw std::runtime_error("write_csv: cannot write sidecar for '" + path + "'");
        side << meta.dump(2) << '\n';
    }
}

namespace detail {
inline std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}
} // namespace detail

/// Reads a CSV produced by write_csv. Per-UE SINDRs are not stored, so the
/// returned records carry only sindr_min and sindr_max in `sindr`.
inline std::vector<SweepRecord> read_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_csv: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("read_csv: unexpected header");
    std::vector<SweepRecord> out;
    while (std::getline(in, line))
    {
        if (line.empty()) continue;
        const auto c = detail::split_csv(line);
        if (c.size() != 14) throw std::runtime_error("read_csv: malformed row '" + line + "'");
        SweepRecord r;
        r.direction = parse_direction(c[0]);
        r.bits = std::stoi(c[1]);
        r.bandwidth_hz = std::stod(c[2]);
        r.tau = std::stoi(c[3]);
        r.m = std::stoi(c[4]);
        if (c[5] != "skipped")
        {
            r.sum_rate_bps = std::stod(c[5]);
            r.sindr = {std::stod(c[6]), std::stod(c[7])};
            r.g_ce = std::stod(c[8]);
            r.g_phase = std::stod(c[9]);
            r.trace_cd = std::stod(c[10]);
            r.delta = std::stod(c[11]);
        }
        r.trials = std::stoull(c[12]);
        r.seed = std::stoull(c[13]);
        out.push_back(std::move(r));
    }
    return out;
}

/// One "b sum_rate_bps" data file per (direction, bandwidth, tau) curve,
/// named <prefix>_<dir>_B<GHz>_tau<tau>.dat. Skipped points are left out.
/// Returns the written paths.
inline std::vector<std::string> write_gnuplot(const std::vector<SweepRecord>& records, const std::string& prefix)
{
    std::map<std::tuple<Direction, double, int>, std::vector<const SweepRecord*>> curves;
    for (const auto& r : records) curves[{r.direction, r.bandwidth_hz, r.tau}].push_back(&r);
    std::vector<std::string> paths;
    for (auto& [key, rows] : curves)
    {
        const auto& [d, bw, tau] = key;
        std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->bits < b->bits; });
        const std::string path = prefix + "_" + to_string(d) + "_B" + format_g9(bw / 1e9) + "_tau" + std::to_string(tau) + ".dat";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("write_gnuplot: cannot open '" + path + "'");
        out << "# " << to_string(d) << " B=" << format_g9(bw) << " Hz tau=" << tau << "\n# b sum_rate_bps\n";
        for (const auto* r : rows)
            if (!r->skipped()) out << r->bits << ' ' << format_g9(r->sum_rate_bps) << '\n';
        paths.push_back(path);
    }
    return paths;
}

/// Bits value with the highest sum rate among the non-skipped records of one curve.
inline int argmax_bits(const std::vector<SweepRecord>& records, Direction d, double bandwidth_hz, int tau)
{
    int best = 0;
    double best_rate = -1.0;
    for (const auto& r : records)
        if (r.direction == d && r.bandwidth_hz == bandwidth_hz && r.tau == tau && !r.skipped() &&
            r.sum_rate_bps > best_rate)
        {
            best_rate = r.sum_rate_bps;
            best = r.bits;
        }
    return best;
}

} // namespace qmimo
