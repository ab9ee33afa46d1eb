#pragma once

// Flat INI-style configuration:
//
//   [scenario] lambda_t, speed = uniform | tabulated, v_a, v_b,
//              speed_magnitudes, speed_pdf (whitespace separated lists),
//              lambda_z, popularity = zipf | explicit, zipf_alpha,
//              n_contents, pmf, tau_c, tau_s, roi_length, lane_gap
//   [radio]    e_bar, w_c_hz, n0_dbm_hz, noise_figure_db, link_margin_db,
//              d_max, d_max_i2d
//   [channel]  kind = log_distance | dual_slope, pl0_db, n, freq_ghz,
//              n_far, breakpoint_m
//   [sim]      duration_s, ci_length_s, replications, master_seed,
//              measurement_region = lo:hi, enb_spacing, prbs_per_delivery,
//              prb_budget, dmax_grid = a:b:step, workers, buckets,
//              cache_bound = lower | upper, opt_lo, opt_hi
//
// '#' and ';' start comments. Keys absent from the file keep the values of
// the preset the file is applied on top of.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "d2doff/analytic.hpp"
#include "d2doff/channel.hpp"
#include "d2doff/domain.hpp"
#include "d2doff/errors.hpp"
#include "d2doff/simulator.hpp"

namespace d2doff {

struct experiment_config {
    std::string preset = "paper";
    scenario_params scenario;
    radio_params radio;
    std::string channel_kind = "log_distance";
    double pl0_db = 34.23;
    double path_loss_exponent = 2.27;
    double freq_ghz = 2.3;
    double far_exponent = 3.5;
    double breakpoint_m = 100.0;
    sim::sim_config sim;
    std::size_t replications = 10;
    std::uint64_t master_seed = 20190101;
    std::vector<double> dmax_grid;
    std::size_t workers = 0; ///< 0: hardware concurrency
    std::size_t buckets = 0;
    cache_bound bound = cache_bound::lower;
    search_interval opt_interval{20.0, 300.0};
    quadrature_spec quad;

    std::shared_ptr<const channel_model> make_channel() const
    {
        if (channel_kind == "log_distance")
            return std::make_shared<log_distance_channel>(pl0_db, path_loss_exponent, freq_ghz);
        if (channel_kind == "dual_slope")
            return std::make_shared<dual_slope_channel>(pl0_db, path_loss_exponent, far_exponent, breakpoint_m);
        throw config_error("unknown channel kind '" + channel_kind + "'");
    }

    model_params model() const
    {
        model_params p;
        p.scenario = scenario;
        p.radio = radio;
        p.channel = make_channel();
        p.bound = bound;
        p.quad = quad;
        return p;
    }

    void validate() const
    {
        scenario.validate();
        radio.validate();
        sim.validate();
        quad.validate();
        make_channel();
        if (replications == 0)
            throw config_error("sim.replications must be >= 1");
        for (double d : dmax_grid) {
            if (!(d > 0.0) || !std::isfinite(d))
                throw config_error("sim.dmax_grid values must be > 0");
        }
        if (!(opt_interval.hi > opt_interval.lo) || !(opt_interval.lo > 0.0))
            throw config_error("optimization interval must satisfy 0 < lo < hi");
    }
};

/// Inclusive grid a, a + step, ..., up to b (within 1e-9 step).
inline std::vector<double> make_grid(double a, double b, double step)
{
    if (!(step > 0.0) || !(b >= a) || !std::isfinite(a) || !std::isfinite(b))
        throw config_error("grid needs a <= b and step > 0");
    std::vector<double> g;
    const auto n = static_cast<std::size_t>(std::floor((b - a) / step + 1e-9));
    for (std::size_t i = 0; i <= n; ++i)
        g.push_back(a + step * static_cast<double>(i));
    return g;
}

namespace detail {

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& v, int line)
{
    double out = 0.0;
    const char* first = v.data();
    const char* last = v.data() + v.size();
    // allow "1/3" style rates
    const auto slash = v.find('/');
    if (slash != std::string::npos) {
        const double num = parse_double(trim(v.substr(0, slash)), line);
        const double den = parse_double(trim(v.substr(slash + 1)), line);
        if (den == 0.0)
            throw config_error("division by zero in '" + v + "'", line);
        return num / den;
    }
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last)
        throw config_error("not a number: '" + v + "'", line);
    return out;
}

inline std::uint64_t parse_uint(const std::string& v, int line)
{
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw config_error("not a non-negative integer: '" + v + "'", line);
    return out;
}

inline std::vector<double> parse_list(const std::string& v, int line)
{
    std::vector<double> out;
    std::string tok;
    std::istringstream is(v);
    while (is >> tok)
        out.push_back(parse_double(tok, line));
    return out;
}

inline std::vector<double> split_colon(const std::string& v, int line)
{
    std::vector<double> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = v.find(':', start);
        out.push_back(parse_double(trim(v.substr(start, pos - start)), line));
        if (pos == std::string::npos)
            break;
        start = pos + 1;
    }
    return out;
}

} // namespace detail

/// "a:b:step", a single value, or an empty string.
inline std::vector<double> parse_grid(const std::string& spec, int line = 0)
{
    const auto s = detail::trim(spec);
    if (s.empty())
        return {};
    const auto parts = detail::split_colon(s, line);
    if (parts.size() == 1)
        return parts;
    if (parts.size() != 3)
        throw config_error("grid must be 'a:b:step' or a single value, got '" + s + "'", line);
    try {
        return make_grid(parts[0], parts[1], parts[2]);
    } catch (const config_error& e) {
        throw config_error(std::string(e.what()) + " in '" + s + "'", line);
    }
}

inline experiment_config paper_preset()
{
    experiment_config c;
    c.preset = "paper";
    c.sim.duration_s = 900.0;
    c.dmax_grid = make_grid(20.0, 300.0, 10.0);
    return c;
}

inline experiment_config desk_preset()
{
    experiment_config c;
    c.preset = "desk";
    c.scenario.popularity = popularity_model::zipf(1.1, 1000);
    c.sim.duration_s = 200.0;
    c.dmax_grid = {20.0, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0};
    return c;
}

inline experiment_config preset(const std::string& name)
{
    if (name == "paper")
        return paper_preset();
    if (name == "desk")
        return desk_preset();
    throw config_error("unknown preset '" + name + "' (expected paper or desk)");
}

/// Applies the key/value pairs of `in` on top of `base`.
inline experiment_config parse_config(std::istream& in, experiment_config base)
{
    auto& c = base;
    std::string section;
    std::string raw;
    int line = 0;

    std::string speed_kind = c.scenario.speed.is_uniform() ? "uniform" : "tabulated";
    double v_a = c.scenario.speed.is_uniform() ? c.scenario.speed.v_a() : 6.0;
    double v_b = c.scenario.speed.is_uniform() ? c.scenario.speed.v_b() : 16.0;
    std::vector<double> mags;
    std::vector<double> mag_pdf;
    int speed_line = 0;
    bool speed_touched = false;

    std::string pop_kind = "zipf";
    double alpha = c.scenario.popularity.alpha();
    auto n_contents = static_cast<std::uint64_t>(c.scenario.popularity.size());
    std::vector<double> pmf;
    int pop_line = 0;
    bool pop_touched = false;

    while (std::getline(in, raw)) {
        ++line;
        auto s = raw;
        const auto hash = s.find_first_of("#;");
        if (hash != std::string::npos)
            s.erase(hash);
        s = detail::trim(s);
        if (s.empty())
            continue;
        if (s.front() == '[') {
            if (s.back() != ']')
                throw config_error("malformed section header '" + s + "'", line);
            section = detail::trim(s.substr(1, s.size() - 2));
            if (section != "scenario" && section != "radio" && section != "channel" && section != "sim")
                throw config_error("unknown section [" + section + "]", line);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw config_error("expected 'key = value', got '" + s + "'", line);
        const auto key = detail::trim(s.substr(0, eq));
        const auto val = detail::trim(s.substr(eq + 1));
        if (section.empty())
            throw config_error("key '" + key + "' outside of any section", line);
        if (val.empty() && key != "dmax_grid")
            throw config_error("empty value for '" + key + "'", line);
        auto num = [&] { return detail::parse_double(val, line); };
        auto unknown = [&] { return config_error("unknown key '" + key + "' in [" + section + "]", line); };

        if (section == "scenario") {
            if (key == "lambda_t") c.scenario.lambda_t = num();
            else if (key == "lambda_z") c.scenario.lambda_Z = num();
            else if (key == "tau_c") c.scenario.tau_c = num();
            else if (key == "tau_s") c.scenario.tau_s = num();
            else if (key == "roi_length") c.scenario.roi_length = num();
            else if (key == "lane_gap") c.scenario.lane_gap = num();
            else if (key == "speed") { speed_kind = val; speed_touched = true; speed_line = line; }
            else if (key == "v_a") { v_a = num(); speed_touched = true; speed_line = line; }
            else if (key == "v_b") { v_b = num(); speed_touched = true; speed_line = line; }
            else if (key == "speed_magnitudes") { mags = detail::parse_list(val, line); speed_touched = true; speed_line = line; }
            else if (key == "speed_pdf") { mag_pdf = detail::parse_list(val, line); speed_touched = true; speed_line = line; }
            else if (key == "popularity") { pop_kind = val; pop_touched = true; pop_line = line; }
            else if (key == "zipf_alpha") { alpha = num(); pop_touched = true; pop_line = line; }
            else if (key == "n_contents") { n_contents = detail::parse_uint(val, line); pop_touched = true; pop_line = line; }
            else if (key == "pmf") { pmf = detail::parse_list(val, line); pop_kind = "explicit"; pop_touched = true; pop_line = line; }
            else throw unknown();
        } else if (section == "radio") {
            if (key == "e_bar") c.radio.e_bar = num();
            else if (key == "w_c_hz") c.radio.w_c_hz = num();
            else if (key == "n0_dbm_hz") c.radio.n0_dbm_hz = num();
            else if (key == "noise_figure_db") c.radio.noise_figure_db = num();
            else if (key == "link_margin_db") c.radio.link_margin_db = num();
            else if (key == "d_max") c.radio.d_max = num();
            else if (key == "d_max_i2d") c.radio.d_max_i2d = num();
            else throw unknown();
        } else if (section == "channel") {
            if (key == "kind") c.channel_kind = val;
            else if (key == "pl0_db") c.pl0_db = num();
            else if (key == "n") c.path_loss_exponent = num();
            else if (key == "freq_ghz") c.freq_ghz = num();
            else if (key == "n_far") c.far_exponent = num();
            else if (key == "breakpoint_m") c.breakpoint_m = num();
            else throw unknown();
            if (key == "kind" && val != "log_distance" && val != "dual_slope")
                throw config_error("unknown channel kind '" + val + "'", line);
        } else {
            if (key == "duration_s") c.sim.duration_s = num();
            else if (key == "ci_length_s") c.sim.ci_length_s = num();
            else if (key == "replications") c.replications = detail::parse_uint(val, line);
            else if (key == "master_seed") c.master_seed = detail::parse_uint(val, line);
            else if (key == "enb_spacing") c.sim.enb_spacing = num();
            else if (key == "prbs_per_delivery") c.sim.prbs_per_delivery = num();
            else if (key == "prb_budget") c.sim.prb_budget = num();
            else if (key == "workers") c.workers = detail::parse_uint(val, line);
            else if (key == "buckets") c.buckets = detail::parse_uint(val, line);
            else if (key == "opt_lo") c.opt_interval.lo = num();
            else if (key == "opt_hi") c.opt_interval.hi = num();
            else if (key == "dmax_grid") c.dmax_grid = parse_grid(val, line);
            else if (key == "measurement_region") {
                const auto r = detail::split_colon(val, line);
                if (r.size() != 2)
                    throw config_error("measurement_region must be 'lo:hi'", line);
                c.sim.region_lo = r[0];
                c.sim.region_hi = r[1];
            } else if (key == "cache_bound") {
                if (val == "lower") c.bound = cache_bound::lower;
                else if (val == "upper") c.bound = cache_bound::upper;
                else throw config_error("cache_bound must be lower or upper", line);
            } else throw unknown();
        }
    }

    try {
        if (speed_touched) {
            if (speed_kind == "uniform")
                c.scenario.speed = speed_distribution::uniform(v_a, v_b);
            else if (speed_kind == "tabulated")
                c.scenario.speed = speed_distribution::symmetric_tabulated(mags, mag_pdf);
            else
                throw config_error("speed must be uniform or tabulated");
        }
    } catch (const std::exception& e) {
        throw config_error(e.what(), speed_line);
    }
    try {
        if (pop_touched) {
            if (pop_kind == "zipf")
                c.scenario.popularity = popularity_model::zipf(alpha, static_cast<std::size_t>(n_contents));
            else if (pop_kind == "explicit")
                c.scenario.popularity = popularity_model::explicit_pmf(pmf);
            else
                throw config_error("popularity must be zipf or explicit");
        }
    } catch (const std::exception& e) {
        throw config_error(e.what(), pop_line);
    }
    c.validate();
    return c;
}

inline experiment_config load_config(const std::string& path, experiment_config base)
{
    std::ifstream in(path);
    if (!in)
        throw config_error("cannot open config file '" + path + "'");
    return parse_config(in, std::move(base));
}

} // namespace d2doff
