#pragma once

// Batch commands behind the command line tool: analytic sweeps, simulation
// sweeps with replication statistics, their comparison, the range optimizer
// and the oracle table. Every command returns plain rows; the writers turn
// them into CSV.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "d2doff/analytic.hpp"
#include "d2doff/config.hpp"
#include "d2doff/oracles.hpp"
#include "d2doff/simulator.hpp"
#include "d2doff/stats.hpp"

namespace d2doff::cli {

inline constexpr const char* tool_version = "0.3.0";

/// Runs f(0..n-1) on at most `workers` threads. The first exception thrown
/// by any task is rethrown once all threads have joined.
template <class F>
void parallel_for(std::size_t n, std::size_t workers, F&& f)
{
    if (workers == 0)
        workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, std::max<std::size_t>(n, 1));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                f(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                next = n;
            }
        }
    };
    if (workers <= 1) {
        body();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < workers; ++t)
            pool.emplace_back(body);
    }
    if (error)
        std::rethrow_exception(error);
}

// ---------------------------------------------------------------- analytic

struct analytic_row {
    double d_max = 0.0;
    double p_off = 0.0;
    double p_imm = 0.0;
    double p_del = 0.0;
    double p_non_off = 0.0;
    double power_total = 0.0;
    double mean_imm = 0.0;
    double power_del = 0.0;
    double mean_non_off = 0.0;
};

inline std::vector<analytic_row> cmd_analytic(const library_model& lib, std::span<const double> grid,
                                              std::size_t workers = 1)
{
    std::vector<analytic_row> rows(grid.size());
    parallel_for(grid.size(), workers, [&](std::size_t i) {
        const double d = grid[i];
        const auto b = lib.offload(d);
        const auto p = lib.power(d);
        rows[i] = {d, b.p_off(), b.p_off_imm, b.p_off_del, b.p_non_off, p.total, p.mean_imm, p.power_del, p.mean_non_off};
    });
    return rows;
}

inline std::vector<analytic_row> cmd_analytic(const experiment_config& cfg, std::span<const double> grid)
{
    cfg.validate();
    const library_model lib(cfg.model(), cfg.buckets);
    return cmd_analytic(lib, grid, cfg.workers);
}

// --------------------------------------------------------------- simulate

struct replication_row {
    double d_max = 0.0;
    sim::sim_metrics metrics;
};

struct aggregate_row {
    double d_max = 0.0;
    std::size_t replications = 0;
    double eff_mean = 0.0;
    double eff_half_width = std::numeric_limits<double>::quiet_NaN(); ///< NaN: not available
    double power_mean = 0.0;
    double power_half_width = std::numeric_limits<double>::quiet_NaN();

    bool has_ci() const noexcept { return std::isfinite(eff_half_width) && std::isfinite(power_half_width); }
};

struct record_row {
    double d_max = 0.0;
    std::size_t replication = 0;
    sim::delivery_record record;
};

struct simulate_result {
    std::vector<replication_row> replications; ///< grid-major, then replication index
    std::vector<aggregate_row> aggregates;
    std::vector<record_row> records; ///< filled when cfg.sim.keep_records
};

inline aggregate_row aggregate_point(double d_max, std::span<const sim::sim_metrics> ms)
{
    aggregate_row a;
    a.d_max = d_max;
    a.replications = ms.size();
    if (ms.empty())
        return a;
    if (ms.size() >= 2) {
        const auto s = sim::aggregate(ms);
        a.eff_mean = s.efficiency.mean;
        a.eff_half_width = s.efficiency.half_width;
        a.power_mean = s.power.mean;
        a.power_half_width = s.power.half_width;
    } else {
        a.eff_mean = ms[0].offloading_efficiency;
        a.power_mean = ms[0].mean_tx_power;
    }
    return a;
}

/// Replication r uses the same seed at every grid point, so the d_max
/// curves are compared under common random numbers.
inline simulate_result cmd_simulate(const experiment_config& cfg, std::span<const double> grid)
{
    cfg.validate();
    const auto channel = cfg.make_channel();
    const std::size_t reps = cfg.replications;
    std::vector<sim::sim_result> runs(grid.size() * reps);
    parallel_for(runs.size(), cfg.workers, [&](std::size_t k) {
        const std::size_t i = k / reps;
        const std::size_t r = k % reps;
        radio_params radio = cfg.radio;
        radio.d_max = grid[i];
        sim::sim_config sc = cfg.sim;
        sc.seed = sim::replication_seed(cfg.master_seed, r);
        runs[k] = sim::run_replication(cfg.scenario, radio, channel, sc, r);
    });

    simulate_result out;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::vector<sim::sim_metrics> ms;
        for (std::size_t r = 0; r < reps; ++r) {
            auto& run = runs[i * reps + r];
            ms.push_back(run.metrics);
            out.replications.push_back({grid[i], run.metrics});
            for (const auto& rec : run.records)
                out.records.push_back({grid[i], r, rec});
        }
        out.aggregates.push_back(aggregate_point(grid[i], ms));
    }
    return out;
}

// ---------------------------------------------------------------- compare

struct compare_point {
    double d_max = 0.0;
    double eff_analytic = 0.0;
    double eff_sim = 0.0;
    double eff_half_width = 0.0;
    double eff_rel_dev = 0.0;
    bool eff_covered = false;
    double power_analytic = 0.0;
    double power_sim = 0.0;
    double power_half_width = 0.0;
    double power_rel_dev = 0.0;
    bool power_covered = false;
};

struct compare_report {
    std::vector<compare_point> points;
    double max_eff_rel_dev = 0.0;
    double max_power_rel_dev = 0.0;
    bool all_covered = true;
};

inline double relative_deviation(double sim, double model)
{
    if (model == 0.0)
        return sim == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::abs(sim - model) / std::abs(model);
}

inline compare_report cmd_compare(std::span<const analytic_row> analytic, std::span<const aggregate_row> sim)
{
    if (analytic.size() != sim.size())
        throw domain_error("compare: grids differ in length (" + std::to_string(analytic.size()) + " vs "
                           + std::to_string(sim.size()) + ")");
    compare_report rep;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const auto& a = analytic[i];
        const auto& s = sim[i];
        if (std::abs(a.d_max - s.d_max) > 1e-6 * std::max(1.0, std::abs(a.d_max)))
            throw domain_error("compare: grid mismatch at row " + std::to_string(i));
        compare_point p;
        p.d_max = a.d_max;
        p.eff_analytic = a.p_off;
        p.eff_sim = s.eff_mean;
        p.eff_half_width = s.eff_half_width;
        p.eff_rel_dev = relative_deviation(s.eff_mean, a.p_off);
        p.eff_covered = s.has_ci() && std::abs(a.p_off - s.eff_mean) <= s.eff_half_width;
        p.power_analytic = a.power_total;
        p.power_sim = s.power_mean;
        p.power_half_width = s.power_half_width;
        p.power_rel_dev = relative_deviation(s.power_mean, a.power_total);
        p.power_covered = s.has_ci() && std::abs(a.power_total - s.power_mean) <= s.power_half_width;
        rep.max_eff_rel_dev = std::max(rep.max_eff_rel_dev, p.eff_rel_dev);
        rep.max_power_rel_dev = std::max(rep.max_power_rel_dev, p.power_rel_dev);
        rep.all_covered = rep.all_covered && p.eff_covered && p.power_covered;
        rep.points.push_back(p);
    }
    return rep;
}

// --------------------------------------------------------------- optimize

struct optimize_report {
    double d_opt = 0.0;
    double power_opt = 0.0;
    double eff_opt = 0.0;
    double d_ref = 0.0;   ///< largest grid range
    double eff_ref = 0.0;
    double eff_sacrifice = 0.0; ///< eff_ref - eff_opt
    double power_ref = 0.0;
    bool at_boundary = false;
    std::size_t evaluations = 0;
};

inline optimize_report optimize_curve(const std::function<double(double)>& power,
                                      const std::function<double(double)>& efficiency, search_interval interval,
                                      double d_ref)
{
    const auto m = golden_section_minimize(power, interval.lo, interval.hi, 0.1, 17);
    optimize_report r;
    r.d_opt = m.x;
    r.power_opt = m.value;
    r.at_boundary = m.at_boundary;
    r.evaluations = m.evaluations;
    r.eff_opt = efficiency(m.x);
    r.d_ref = d_ref;
    r.eff_ref = efficiency(d_ref);
    r.power_ref = power(d_ref);
    r.eff_sacrifice = r.eff_ref - r.eff_opt;
    return r;
}

inline optimize_report cmd_optimize(const experiment_config& cfg, search_interval interval)
{
    cfg.validate();
    const library_model lib(cfg.model(), cfg.buckets);
    const double d_ref = cfg.dmax_grid.empty() ? interval.hi
                                               : *std::max_element(cfg.dmax_grid.begin(), cfg.dmax_grid.end());
    return optimize_curve([&](double d) { return lib.avg_power(d); },
                          [&](double d) { return lib.prob_offload_given_nr(d); }, interval, d_ref);
}

// ----------------------------------------------------------------- oracle

struct oracle_row {
    std::string name;
    double reference = 0.0; ///< closed-form value the estimate is checked against
    oracles::oracle_estimate estimate;
};

/// Regenerates the Monte Carlo values that the tests pin.
inline std::vector<oracle_row> cmd_oracle(const experiment_config& cfg, std::uint64_t seed)
{
    const auto p = cfg.model();
    const auto& sc = p.scenario;
    const auto& ch = *p.channel;
    const double rho = spatial_density(sc.lambda_t, sc.speed);
    std::vector<oracle_row> rows;
    rows.push_back({"spatial_density", rho, oracles::mc_spatial_density(sc.lambda_t, sc.speed, 2000.0, seed, 256)});
    for (double v : {0.0, 6.0, 11.0, 16.0}) {
        rows.push_back({"encounter_rate_v" + std::to_string(static_cast<int>(v)), encounter_rate(v, sc.lambda_t, sc.speed),
                        oracles::mc_encounter_rate(v, sc.lambda_t, sc.speed, 20000.0, seed + 1, p.radio.d_max)});
    }
    rows.push_back({"mean_power_non_off", mean_power_non_off(p.radio.d_max_i2d, p.radio, ch),
                    oracles::mc_transform_mean(oracles::uniform_distance(p.radio.d_max_i2d), p.radio, ch, 1000000, seed + 2)});
    const double rho_z1 = content_density(rho, content_request_rate(1, sc.popularity, sc.lambda_Z), sc.tau_s, sc.tau_c);
    rows.push_back({"mean_power_imm_z1", mean_power_imm(p.radio.d_max, rho_z1, p.radio, ch),
                    oracles::mc_transform_mean(oracles::truncated_nearest_neighbor(rho_z1, p.radio.d_max), p.radio, ch,
                                               1000000, seed + 3)});
    const std::size_t z_mid = std::min<std::size_t>(1000, sc.popularity.size());
    const double lz = content_request_rate(z_mid, sc.popularity, sc.lambda_Z);
    const auto bounds = cache_probability_bounds(lz, sc.tau_s, sc.tau_c);
    rows.push_back({"cache_occupancy_z" + std::to_string(z_mid) + "_delayed", bounds.lower,
                    oracles::mc_cache_occupancy(lz, sc.tau_s, sc.tau_c, 4e7, seed + 4)});
    rows.push_back({"cache_occupancy_z" + std::to_string(z_mid) + "_instant", bounds.upper,
                    oracles::mc_cache_occupancy(lz, sc.tau_s, sc.tau_c, 4e7, seed + 5, oracles::delivery_delay::instant)});
    return rows;
}

// -------------------------------------------------------------------- csv

namespace detail {

inline std::string fmt(double x)
{
    if (std::isnan(x))
        return "NA";
    std::ostringstream os;
    os << std::setprecision(12) << x;
    return os.str();
}

inline std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ','))
        out.push_back(cell);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    return out;
}

inline double cell_double(const std::string& s, int line)
{
    if (s == "NA")
        return std::numeric_limits<double>::quiet_NaN();
    return d2doff::detail::parse_double(s, line);
}

// header -> column index
inline std::map<std::string, std::size_t> header_index(std::istream& in, std::initializer_list<const char*> required)
{
    std::string line;
    if (!std::getline(in, line))
        throw config_error("empty CSV input");
    const auto cols = split_csv(line);
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < cols.size(); ++i)
        idx[cols[i]] = i;
    for (const char* r : required) {
        if (!idx.contains(r))
            throw config_error(std::string("CSV header lacks column '") + r + "'", 1);
    }
    return idx;
}

} // namespace detail

inline void write_analytic_csv(std::ostream& os, std::span<const analytic_row> rows)
{
    os << "d_max,p_off_given_nr,p_off_imm,p_off_del,p_non_off,power_total_mw,mean_imm_mw,power_del_mw,mean_non_off_mw\n";
    using detail::fmt;
    for (const auto& r : rows)
        os << fmt(r.d_max) << ',' << fmt(r.p_off) << ',' << fmt(r.p_imm) << ',' << fmt(r.p_del) << ','
           << fmt(r.p_non_off) << ',' << fmt(r.power_total) << ',' << fmt(r.mean_imm) << ',' << fmt(r.power_del)
           << ',' << fmt(r.mean_non_off) << '\n';
}

inline std::vector<analytic_row> read_analytic_csv(std::istream& in)
{
    const auto idx = detail::header_index(in, {"d_max", "p_off_given_nr", "power_total_mw"});
    std::vector<analytic_row> rows;
    std::string line;
    int n = 1;
    auto get = [&](const std::vector<std::string>& cells, const char* col) {
        const auto it = idx.find(col);
        if (it == idx.end())
            return 0.0;
        if (it->second >= cells.size())
            throw config_error(std::string("missing column '") + col + "'", n);
        return detail::cell_double(cells[it->second], n);
    };
    while (std::getline(in, line)) {
        ++n;
        if (line.empty())
            continue;
        const auto c = detail::split_csv(line);
        rows.push_back({get(c, "d_max"), get(c, "p_off_given_nr"), get(c, "p_off_imm"), get(c, "p_off_del"),
                        get(c, "p_non_off"), get(c, "power_total_mw"), get(c, "mean_imm_mw"), get(c, "power_del_mw"),
                        get(c, "mean_non_off_mw")});
    }
    return rows;
}

inline void write_replications_csv(std::ostream& os, std::span<const replication_row> rows)
{
    os << "d_max,replication,seed,efficiency,mean_power_mw,requests,repeated,imm,delayed,i2d,duplicates,"
          "all_imm,all_delayed,all_i2d,all_repeated,vehicles_seen,max_prbs_per_ci,prb_budget_exceeded\n";
    using detail::fmt;
    for (const auto& r : rows) {
        const auto& m = r.metrics;
        os << fmt(r.d_max) << ',' << m.replication << ',' << m.seed << ',' << fmt(m.offloading_efficiency) << ','
           << fmt(m.mean_tx_power) << ',' << m.requests << ',' << m.region.repeated << ',' << m.region.imm << ','
           << m.region.delayed << ',' << m.region.i2d << ',' << m.duplicates << ',' << m.all.imm << ','
           << m.all.delayed << ',' << m.all.i2d << ',' << m.all.repeated << ',' << m.vehicles_seen << ','
           << m.max_prbs_per_ci << ',' << (m.prb_budget_exceeded ? 1 : 0) << '\n';
    }
}

inline void write_aggregate_csv(std::ostream& os, std::span<const aggregate_row> rows)
{
    os << "d_max,replications,eff_mean,eff_ci_lo,eff_ci_hi,eff_half_width,power_mean_mw,power_ci_lo,power_ci_hi,"
          "power_half_width\n";
    using detail::fmt;
    for (const auto& a : rows) {
        os << fmt(a.d_max) << ',' << a.replications << ',' << fmt(a.eff_mean) << ','
           << fmt(a.eff_mean - a.eff_half_width) << ',' << fmt(a.eff_mean + a.eff_half_width) << ','
           << fmt(a.eff_half_width) << ',' << fmt(a.power_mean) << ',' << fmt(a.power_mean - a.power_half_width)
           << ',' << fmt(a.power_mean + a.power_half_width) << ',' << fmt(a.power_half_width) << '\n';
    }
}

inline std::vector<aggregate_row> read_aggregate_csv(std::istream& in)
{
    const auto idx = detail::header_index(
        in, {"d_max", "replications", "eff_mean", "eff_half_width", "power_mean_mw", "power_half_width"});
    std::vector<aggregate_row> rows;
    std::string line;
    int n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty())
            continue;
        const auto c = detail::split_csv(line);
        auto get = [&](const char* col) {
            const auto i = idx.at(col);
            if (i >= c.size())
                throw config_error(std::string("missing column '") + col + "'", n);
            return detail::cell_double(c[i], n);
        };
        aggregate_row a;
        a.d_max = get("d_max");
        a.replications = static_cast<std::size_t>(get("replications"));
        a.eff_mean = get("eff_mean");
        a.eff_half_width = get("eff_half_width");
        a.power_mean = get("power_mean_mw");
        a.power_half_width = get("power_half_width");
        rows.push_back(a);
    }
    return rows;
}

inline void write_records_csv(std::ostream& os, std::span<const record_row> rows)
{
    os << "d_max,replication,time,issue_time,z,mode,distance_m,booked_distance_m,power_mw,region_flag\n";
    using detail::fmt;
    for (const auto& r : rows) {
        const auto& d = r.record;
        os << fmt(r.d_max) << ',' << r.replication << ',' << fmt(d.serve_time) << ',' << fmt(d.issue_time) << ','
           << d.z << ',' << sim::to_string(d.mode) << ',' << fmt(d.tx_distance) << ',' << fmt(d.booked_distance)
           << ',' << fmt(d.tx_power) << ',' << (d.in_region ? 1 : 0) << '\n';
    }
}

inline void write_compare_csv(std::ostream& os, const compare_report& rep)
{
    os << "d_max,eff_analytic,eff_sim,eff_half_width,eff_rel_dev,eff_covered,power_analytic_mw,power_sim_mw,"
          "power_half_width,power_rel_dev,power_covered\n";
    using detail::fmt;
    for (const auto& p : rep.points)
        os << fmt(p.d_max) << ',' << fmt(p.eff_analytic) << ',' << fmt(p.eff_sim) << ',' << fmt(p.eff_half_width)
           << ',' << fmt(p.eff_rel_dev) << ',' << (p.eff_covered ? 1 : 0) << ',' << fmt(p.power_analytic) << ','
           << fmt(p.power_sim) << ',' << fmt(p.power_half_width) << ',' << fmt(p.power_rel_dev) << ','
           << (p.power_covered ? 1 : 0) << '\n';
}

inline void write_optimize_csv(std::ostream& os, const optimize_report& r)
{
    using detail::fmt;
    os << "d_opt,power_opt_mw,eff_opt,d_ref,eff_ref,power_ref_mw,eff_sacrifice,at_boundary,evaluations\n"
       << fmt(r.d_opt) << ',' << fmt(r.power_opt) << ',' << fmt(r.eff_opt) << ',' << fmt(r.d_ref) << ','
       << fmt(r.eff_ref) << ',' << fmt(r.power_ref) << ',' << fmt(r.eff_sacrifice) << ',' << (r.at_boundary ? 1 : 0)
       << ',' << r.evaluations << '\n';
}

inline void write_oracle_csv(std::ostream& os, std::span<const oracle_row> rows)
{
    using detail::fmt;
    os << "name,reference,estimate,std_error,samples,seed,flagged\n";
    for (const auto& r : rows)
        os << r.name << ',' << fmt(r.reference) << ',' << fmt(r.estimate.value) << ',' << fmt(r.estimate.std_error)
           << ',' << r.estimate.sample_count << ',' << r.estimate.seed << ',' << (r.estimate.flagged ? 1 : 0) << '\n';
}

// --------------------------------------------------------------- manifest

inline std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

inline nlohmann::json config_json(const experiment_config& c)
{
    nlohmann::json j;
    const auto& sc = c.scenario;
    j["preset"] = c.preset;
    j["scenario"] = {{"lambda_t", sc.lambda_t},
                     {"speed", sc.speed.is_uniform() ? "uniform" : "tabulated"},
                     {"v_a", sc.speed.is_uniform() ? sc.speed.v_a() : sc.speed.min_abs_speed()},
                     {"v_b", sc.speed.support_max()},
                     {"lambda_z", sc.lambda_Z},
                     {"popularity", sc.popularity.type() == popularity_model::kind::zipf ? "zipf" : "explicit"},
                     {"zipf_alpha", sc.popularity.alpha()},
                     {"n_contents", sc.popularity.size()},
                     {"tau_c", sc.tau_c},
                     {"tau_s", sc.tau_s},
                     {"roi_length", sc.roi_length},
                     {"lane_gap", sc.lane_gap}};
    const auto& r = c.radio;
    j["radio"] = {{"e_bar", r.e_bar}, {"w_c_hz", r.w_c_hz}, {"n0_dbm_hz", r.n0_dbm_hz},
                  {"noise_figure_db", r.noise_figure_db}, {"link_margin_db", r.link_margin_db},
                  {"d_max", r.d_max}, {"d_max_i2d", r.d_max_i2d}};
    j["channel"] = {{"kind", c.channel_kind}, {"pl0_db", c.pl0_db}, {"n", c.path_loss_exponent},
                    {"freq_ghz", c.freq_ghz}, {"n_far", c.far_exponent}, {"breakpoint_m", c.breakpoint_m}};
    j["sim"] = {{"duration_s", c.sim.duration_s}, {"ci_length_s", c.sim.ci_length_s},
                {"replications", c.replications}, {"master_seed", c.master_seed},
                {"measurement_region", {c.sim.region_lo, c.sim.region_hi}}, {"enb_spacing", c.sim.enb_spacing},
                {"prbs_per_delivery", c.sim.prbs_per_delivery}, {"prb_budget", c.sim.prb_budget},
                {"dmax_grid", c.dmax_grid}, {"buckets", c.buckets},
                {"cache_bound", c.bound == cache_bound::lower ? "lower" : "upper"},
                {"opt_interval", {c.opt_interval.lo, c.opt_interval.hi}}};
    return j;
}

struct run_manifest {
    std::string command;
    experiment_config config;
    std::string started;
    std::string finished;
    std::vector<std::string> outputs;
    std::string status = "running";

    nlohmann::json to_json() const
    {
        return {{"tool", "d2doff"}, {"version", tool_version}, {"command", command},
                {"master_seed", config.master_seed}, {"started_utc", started}, {"finished_utc", finished},
                {"status", status}, {"outputs", outputs}, {"config", config_json(config)}};
    }

    void write(const std::filesystem::path& dir) const
    {
        std::ofstream os(dir / (command + "_manifest.json"));
        if (!os)
            throw config_error("cannot write manifest in '" + dir.string() + "'");
        os << to_json().dump(2) << '\n';
    }
};

} // namespace d2doff::cli
