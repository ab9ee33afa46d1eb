#pragma once

// Discrete-event simulation of a two-lane street chunk: vehicles enter at both
// ends, issue content requests, and the content dissemination controller
// serves them from a neighbour's cache (immediately or at a later control
// interval) or, at the content timeout, from the infrastructure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <queue>
#include <random>
#include <unordered_map>
#include <vector>

#include "d2doff/channel.hpp"
#include "d2doff/domain.hpp"
#include "d2doff/errors.hpp"
#include "d2doff/stats.hpp"

namespace d2doff::sim {

struct sim_config {
    double duration_s = 900.0;  ///< requests are issued on [0, duration)
    double ci_length_s = 1.0;   ///< control interval of the scheduler
    std::uint64_t seed = 1;
    double region_lo = 300.0;   ///< measurement region along the street [m]
    double region_hi = 1500.0;
    double enb_spacing = 600.0; ///< eNodeBs at 0, spacing, 2 spacing, ... up to roi_length
    double prbs_per_delivery = 400.0;
    double prb_budget = 50000.0; ///< per control interval
    bool keep_records = false;
    bool track_vehicle_count = false; ///< sample the active count at every control interval

    void validate() const
    {
        if (!(duration_s >= 0.0) || !std::isfinite(duration_s))
            throw config_error("sim.duration_s must be >= 0");
        if (!(ci_length_s > 0.0) || !std::isfinite(ci_length_s))
            throw config_error("sim.ci_length_s must be > 0");
        if (!(region_hi >= region_lo))
            throw config_error("sim measurement region must satisfy lo <= hi");
        if (!(enb_spacing > 0.0))
            throw config_error("sim.enb_spacing must be > 0");
        if (!(prbs_per_delivery >= 0.0) || !(prb_budget >= 0.0))
            throw config_error("sim PRB figures must be >= 0");
    }
};

enum class delivery_mode { imm, delayed, i2d, repeated };

inline const char* to_string(delivery_mode m)
{
    switch (m) {
    case delivery_mode::imm: return "imm";
    case delivery_mode::delayed: return "delayed";
    case delivery_mode::i2d: return "i2d";
    case delivery_mode::repeated: return "repeated";
    }
    return "?";
}

struct delivery_record {
    delivery_mode mode = delivery_mode::i2d;
    std::size_t z = 0;
    std::size_t requester = 0;
    double issue_time = 0.0;
    double serve_time = 0.0;
    double tx_distance = 0.0;     ///< true transmitter-receiver distance [m]
    double booked_distance = 0.0; ///< distance used for power (d_max for delayed)
    double tx_power = 0.0;        ///< per-subcarrier power [mW], 0 for repeated
    bool in_region = false;
};

struct mode_counts {
    std::size_t imm = 0;
    std::size_t delayed = 0;
    std::size_t i2d = 0;
    std::size_t repeated = 0;

    std::size_t non_repeated() const noexcept { return imm + delayed + i2d; }
};

struct sim_metrics {
    double offloading_efficiency = 0.0; ///< (imm + delayed) / non-repeated, measurement region
    double mean_tx_power = 0.0;         ///< mW per subcarrier over non-repeated, measurement region
    mode_counts region;                 ///< measurement region only
    mode_counts all;                    ///< whole street
    std::size_t requests = 0;           ///< issued requests
    std::size_t duplicates = 0;         ///< requests for a content already pending at the requester
    std::size_t vehicles_seen = 0;
    std::size_t max_prbs_per_ci = 0;
    bool prb_budget_exceeded = false;
    std::size_t replication = 0;
    std::uint64_t seed = 0;
    std::vector<double> vehicle_count_samples;
};

struct sim_result {
    sim_metrics metrics;
    std::vector<delivery_record> records;
};

struct cache_entry {
    double sharing_deadline = 0.0;
};

struct vehicle {
    std::size_t id = 0;
    double x0 = 0.0;     ///< position at t0
    double t0 = 0.0;
    double speed = 0.0;  ///< signed [m/s]
    double lane_y = 0.0;
    double exit_time = 0.0;
    bool active = true;
    std::unordered_map<std::size_t, cache_entry> cache;

    double position(double t) const noexcept { return x0 + speed * (t - t0); }

    bool holds(std::size_t z, double t) const
    {
        const auto it = cache.find(z);
        return it != cache.end() && it->second.sharing_deadline > t;
    }
};

enum class request_state { waiting, served_imm, served_delayed, served_i2d };

struct pending_request {
    std::size_t requester = 0;
    std::size_t z = 0;
    double issue_time = 0.0;
    double content_deadline = 0.0;
    request_state state = request_state::waiting;
};

/// Independent random streams derived from one seed.
struct rng_streams {
    std::mt19937_64 warm;
    std::mt19937_64 arrivals;
    std::mt19937_64 speeds;
    std::mt19937_64 requests;
    std::mt19937_64 contents;
    std::mt19937_64 caches;

    explicit rng_streams(std::uint64_t seed)
        : warm(stream(seed, 0))
        , arrivals(stream(seed, 1))
        , speeds(stream(seed, 2))
        , requests(stream(seed, 3))
        , contents(stream(seed, 4))
        , caches(stream(seed, 5))
    {
    }

    static std::mt19937_64 stream(std::uint64_t seed, std::uint32_t id)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), id};
        return std::mt19937_64(seq);
    }
};

/// Seed of replication `r` under a master seed.
inline std::uint64_t replication_seed(std::uint64_t master, std::size_t r)
{
    std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                      static_cast<std::uint32_t>(r), 0x7265u};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

struct sim_world {
    scenario_params scenario;
    radio_params radio;
    std::shared_ptr<const channel_model> channel;
    sim_config config;
    std::vector<vehicle> vehicles; ///< index == id; inactive ones are kept
    std::vector<std::size_t> active; ///< ids of vehicles on the street, ascending
    std::vector<pending_request> requests;
    double now = 0.0;
    rng_streams rng;
    std::vector<double> cache_prob; ///< per content, index z - 1

    sim_world(scenario_params sc, radio_params ra, std::shared_ptr<const channel_model> ch, sim_config cfg)
        : scenario(std::move(sc))
        , radio(ra)
        , channel(std::move(ch))
        , config(cfg)
        , rng(cfg.seed)
    {
    }
};

namespace detail {

// Seed a cache with the stationary lower-bound occupancy: content z is held
// with probability 1 - exp(-lambda_z W), W = tau_s - tau_c; the last request
// lies u ~ Exp(lambda_z) truncated to [0, W] before t - tau_c, leaving W - u.
inline void seed_cache(sim_world& w, vehicle& v, double t)
{
    const auto& sc = w.scenario;
    const double span = sc.tau_s - sc.tau_c;
    if (!(span > 0.0) || !(sc.lambda_Z > 0.0))
        return;
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const auto pmf = sc.popularity.pmf();
    for (std::size_t i = 0; i < pmf.size(); ++i) {
        const double p = w.cache_prob[i];
        if (p <= 0.0)
            continue;
        if (u01(w.rng.caches) >= p)
            continue;
        const double lz = pmf[i] * sc.lambda_Z;
        // inverse cdf of Exp(lz) truncated to [0, span]
        const double age = -std::log1p(-u01(w.rng.caches) * p) / lz;
        v.cache[i + 1].sharing_deadline = t + std::max(span - std::min(age, span), 0.0);
    }
}

inline double lane_of(const scenario_params& sc, double speed) { return speed >= 0.0 ? 0.0 : sc.lane_gap; }

inline vehicle& add_vehicle(sim_world& w, double x, double t, double speed)
{
    vehicle v;
    v.id = w.vehicles.size();
    v.x0 = x;
    v.t0 = t;
    v.speed = speed;
    v.lane_y = lane_of(w.scenario, speed);
    const double target = speed >= 0.0 ? w.scenario.roi_length : 0.0;
    v.exit_time = t + std::abs(target - x) / std::abs(speed);
    w.vehicles.push_back(std::move(v));
    w.active.push_back(w.vehicles.back().id);
    return w.vehicles.back();
}

} // namespace detail

inline std::vector<double> lower_bound_cache_probs(const scenario_params& sc)
{
    const auto pmf = sc.popularity.pmf();
    std::vector<double> out(pmf.size());
    for (std::size_t i = 0; i < pmf.size(); ++i)
        out[i] = -std::expm1(-pmf[i] * sc.lambda_Z * (sc.tau_s - sc.tau_c));
    return out;
}

/// Initial world at t = 0. Arrivals are replayed over the longest possible
/// crossing time before 0 so positions and speeds follow the stationary law;
/// caches are seeded with the lower-bound occupancy.
inline sim_world warm_start(const scenario_params& sc, const radio_params& radio,
                            std::shared_ptr<const channel_model> ch, const sim_config& cfg)
{
    sc.validate();
    radio.validate();
    cfg.validate();
    if (!ch)
        throw config_error("warm_start: no channel model");
    if (sc.lambda_t > 0.0 && sc.speed.touches_zero())
        throw divergence_error("warm_start: speed law touches 0, vehicles never leave the street");
    sim_world w(sc, radio, std::move(ch), cfg);
    w.cache_prob = lower_bound_cache_probs(sc);
    if (!(sc.lambda_t > 0.0))
        return w;

    const double v_min = sc.speed.min_abs_speed();
    const double pre = sc.roi_length / v_min;
    std::exponential_distribution<double> gap(0.5 * sc.lambda_t);
    struct seed_vehicle { double t_in; double speed; int end; };
    std::vector<seed_vehicle> seeds;
    for (int end = 0; end < 2; ++end) {
        for (double t = -pre + gap(w.rng.warm); t < 0.0; t += gap(w.rng.warm)) {
            const double mag = w.scenario.speed.sample_magnitude(w.rng.warm);
            if (mag * (0.0 - t) < sc.roi_length)
                seeds.push_back({t, end == 0 ? mag : -mag, end});
        }
    }
    std::sort(seeds.begin(), seeds.end(), [](const seed_vehicle& a, const seed_vehicle& b) { return a.t_in < b.t_in; });
    for (const auto& s : seeds) {
        const double x_in = s.end == 0 ? 0.0 : sc.roi_length;
        auto& v = detail::add_vehicle(w, x_in + s.speed * (0.0 - s.t_in), 0.0, s.speed);
        detail::seed_cache(w, v, 0.0);
    }
    std::sort(w.active.begin(), w.active.end());
    return w;
}

/// Closest active vehicle other than `requester` that holds z within d_max
/// (2-D distance including the lane offset). Ties go to the lower id.
inline std::optional<std::size_t> nearest_holder(const sim_world& w, std::size_t requester, std::size_t z,
                                                 double d_max, double* distance = nullptr)
{
    const auto& me = w.vehicles.at(requester);
    const double x = me.position(w.now);
    std::optional<std::size_t> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t id : w.active) {
        if (id == requester)
            continue;
        const auto& o = w.vehicles[id];
        if (!o.holds(z, w.now))
            continue;
        const double d = std::hypot(o.position(w.now) - x, o.lane_y - me.lane_y);
        if (d <= d_max && (d < best_d || (d == best_d && id < *best))) {
            best = id;
            best_d = d;
        }
    }
    if (best && distance)
        *distance = best_d;
    return best;
}

namespace detail {

enum class event_kind { arrival, exit, request, ci_tick, content_timeout };

struct event {
    double time = 0.0;
    std::uint64_t seq = 0;
    event_kind kind = event_kind::ci_tick;
    std::size_t target = 0; ///< end for arrivals, vehicle id, or request index

    bool operator>(const event& o) const noexcept
    {
        return time != o.time ? time > o.time : seq > o.seq;
    }
};

class engine {
public:
    explicit engine(sim_world& w)
        : w_(w)
        , k_(db_to_linear(w.radio.link_margin_db) * sigma_c_squared(w.radio) * std::expm1(w.radio.e_bar * std::numbers::ln2))
        , enb_count_(static_cast<std::size_t>(std::floor(w.scenario.roi_length / w.config.enb_spacing + 1e-9)) + 1)
    {
        metrics_.seed = w.config.seed;
        metrics_.vehicles_seen = w.vehicles.size();
    }

    sim_result run()
    {
        const auto& sc = w_.scenario;
        const auto& cfg = w_.config;
        horizon_ = cfg.duration_s + sc.tau_c;
        if (sc.lambda_t > 0.0) {
            for (std::size_t end = 0; end < 2; ++end)
                schedule(next_gap(0.5 * sc.lambda_t, w_.rng.arrivals), event_kind::arrival, end);
        }
        for (std::size_t id : w_.active) {
            schedule(w_.vehicles[id].exit_time, event_kind::exit, id);
            schedule_request(id, 0.0);
        }
        schedule(cfg.ci_length_s, event_kind::ci_tick, 0);

        while (!queue_.empty()) {
            const event e = queue_.top();
            queue_.pop();
            if (e.time > horizon_)
                break;
            w_.now = e.time;
            switch (e.kind) {
            case event_kind::arrival: on_arrival(e.target); break;
            case event_kind::exit: on_exit(e.target); break;
            case event_kind::request: on_request(e.target); break;
            case event_kind::ci_tick: on_tick(); break;
            case event_kind::content_timeout: on_content_timeout(e.target); break;
            }
        }
        close_ci_window();
        finish();
        return std::move(result_);
    }

private:
    static double next_gap(double rate, std::mt19937_64& rng)
    {
        return std::exponential_distribution<double>(rate)(rng);
    }

    void schedule(double t, event_kind kind, std::size_t target)
    {
        queue_.push(event{t, seq_++, kind, target});
    }

    void schedule_request(std::size_t id, double from)
    {
        const auto& sc = w_.scenario;
        if (!(sc.lambda_Z > 0.0))
            return;
        const double t = from + next_gap(sc.lambda_Z, w_.rng.requests);
        const auto& v = w_.vehicles[id];
        if (t < w_.config.duration_s && t < v.exit_time)
            schedule(t, event_kind::request, id);
    }

    double power_at(double d) const
    {
        return k_ * std::pow(10.0, -w_.channel->g_db(std::max(d, 1e-6)) / 10.0);
    }

    bool in_region(double x) const { return x >= w_.config.region_lo && x <= w_.config.region_hi; }

    void on_arrival(std::size_t end)
    {
        const auto& sc = w_.scenario;
        const double mag = sc.speed.sample_magnitude(w_.rng.speeds);
        const double speed = end == 0 ? mag : -mag;
        auto& v = add_vehicle(w_, end == 0 ? 0.0 : sc.roi_length, w_.now, speed);
        seed_cache(w_, v, w_.now);
        ++metrics_.vehicles_seen;
        const std::size_t id = v.id;
        schedule(w_.vehicles[id].exit_time, event_kind::exit, id);
        schedule_request(id, w_.now);
        schedule(w_.now + next_gap(0.5 * sc.lambda_t, w_.rng.arrivals), event_kind::arrival, end);
    }

    void on_exit(std::size_t id)
    {
        auto& v = w_.vehicles[id];
        v.active = false;
        const auto it = std::lower_bound(w_.active.begin(), w_.active.end(), id);
        if (it != w_.active.end() && *it == id)
            w_.active.erase(it);
    }

    void on_request(std::size_t id)
    {
        auto& v = w_.vehicles[id];
        if (!v.active)
            return;
        const auto& sc = w_.scenario;
        const std::size_t z = sc.popularity.sample(w_.rng.contents);
        ++metrics_.requests;
        schedule_request(id, w_.now);

        if (v.holds(z, w_.now)) {
            v.cache[z].sharing_deadline = w_.now + sc.tau_s;
            delivery_record r;
            r.mode = delivery_mode::repeated;
            r.z = z;
            r.requester = id;
            r.issue_time = r.serve_time = w_.now;
            r.in_region = in_region(v.position(w_.now));
            book(r);
            return;
        }
        if (pending_.contains(key(id, z))) {
            ++metrics_.duplicates;
            return;
        }

        pending_request req{id, z, w_.now, w_.now + sc.tau_c, request_state::waiting};
        double dist = 0.0;
        if (w_.radio.d_max > 0.0 && nearest_holder(w_, id, z, w_.radio.d_max, &dist)) {
            req.state = request_state::served_imm;
            w_.requests.push_back(req);
            deliver(w_.requests.size() - 1, delivery_mode::imm, dist, dist);
            return;
        }
        w_.requests.push_back(req);
        const std::size_t idx = w_.requests.size() - 1;
        pending_.emplace(key(id, z), idx);
        schedule(req.content_deadline, event_kind::content_timeout, idx);
    }

    void on_tick()
    {
        close_ci_window();
        if (w_.config.track_vehicle_count && w_.now <= w_.config.duration_s)
            metrics_.vehicle_count_samples.push_back(static_cast<double>(w_.active.size()));
        if (w_.radio.d_max > 0.0) {
            // pending_ is ordered by key, so the scan order is deterministic
            std::vector<std::size_t> served;
            for (const auto& [k, idx] : pending_) {
                auto& req = w_.requests[idx];
                if (!w_.vehicles[req.requester].active || !(w_.now < req.content_deadline))
                    continue;
                double dist = 0.0;
                if (nearest_holder(w_, req.requester, req.z, w_.radio.d_max, &dist)) {
                    req.state = request_state::served_delayed;
                    deliver(idx, delivery_mode::delayed, dist, w_.radio.d_max);
                    served.push_back(k);
                }
            }
            for (auto k : served)
                pending_.erase(k);
        }
        if (w_.now + w_.config.ci_length_s <= horizon_)
            schedule(w_.now + w_.config.ci_length_s, event_kind::ci_tick, 0);
    }

    void on_content_timeout(std::size_t idx)
    {
        auto& req = w_.requests[idx];
        if (req.state != request_state::waiting)
            return;
        pending_.erase(key(req.requester, req.z));
        req.state = request_state::served_i2d;
        const auto& v = w_.vehicles[req.requester];
        // a device that already left is served at its exit point
        const double x = std::clamp(v.position(w_.now), 0.0, w_.scenario.roi_length);
        const double cell = w_.config.enb_spacing;
        const double nearest = std::min(std::round(x / cell), static_cast<double>(enb_count_ - 1)) * cell;
        const double d = std::abs(x - nearest);
        deliver(idx, delivery_mode::i2d, d, d);
    }

    void deliver(std::size_t idx, delivery_mode mode, double true_d, double booked_d)
    {
        const auto& req = w_.requests[idx];
        auto& v = w_.vehicles[req.requester];
        if (v.active)
            v.cache[req.z].sharing_deadline = w_.now + w_.scenario.tau_s;
        delivery_record r;
        r.mode = mode;
        r.z = req.z;
        r.requester = req.requester;
        r.issue_time = req.issue_time;
        r.serve_time = w_.now;
        r.tx_distance = true_d;
        r.booked_distance = booked_d;
        r.tx_power = power_at(booked_d);
        r.in_region = v.active && in_region(v.position(w_.now));
        ++ci_deliveries_;
        book(r);
    }

    void book(const delivery_record& r)
    {
        auto bump = [&](mode_counts& c) {
            switch (r.mode) {
            case delivery_mode::imm: ++c.imm; break;
            case delivery_mode::delayed: ++c.delayed; break;
            case delivery_mode::i2d: ++c.i2d; break;
            case delivery_mode::repeated: ++c.repeated; break;
            }
        };
        bump(metrics_.all);
        if (r.in_region) {
            bump(metrics_.region);
            if (r.mode != delivery_mode::repeated)
                power_sum_ += r.tx_power;
        }
        if (w_.config.keep_records)
            result_.records.push_back(r);
    }

    // PRBs used in the control interval that ends now
    void close_ci_window()
    {
        const auto prbs = static_cast<std::size_t>(static_cast<double>(ci_deliveries_) * w_.config.prbs_per_delivery);
        metrics_.max_prbs_per_ci = std::max(metrics_.max_prbs_per_ci, prbs);
        if (static_cast<double>(prbs) > w_.config.prb_budget)
            metrics_.prb_budget_exceeded = true;
        ci_deliveries_ = 0;
    }

    void finish()
    {
        const auto nr = metrics_.region.non_repeated();
        if (nr > 0) {
            metrics_.offloading_efficiency =
                static_cast<double>(metrics_.region.imm + metrics_.region.delayed) / static_cast<double>(nr);
            metrics_.mean_tx_power = power_sum_ / static_cast<double>(nr);
        }
        result_.metrics = std::move(metrics_);
    }

    static std::uint64_t key(std::size_t id, std::size_t z)
    {
        return (static_cast<std::uint64_t>(id) << 32) | static_cast<std::uint64_t>(z);
    }

    sim_world& w_;
    double k_; ///< power at unit gain [mW]
    std::size_t enb_count_;
    std::priority_queue<event, std::vector<event>, std::greater<>> queue_;
    std::uint64_t seq_ = 0;
    double horizon_ = 0.0;
    std::map<std::uint64_t, std::size_t> pending_;
    std::size_t ci_deliveries_ = 0;
    double power_sum_ = 0.0;
    sim_metrics metrics_;
    sim_result result_;
};

} // namespace detail

/// One replication from a warm-started world.
inline sim_result run_replication(const scenario_params& sc, const radio_params& radio,
                                  std::shared_ptr<const channel_model> ch, const sim_config& cfg,
                                  std::size_t replication = 0)
{
    auto world = warm_start(sc, radio, std::move(ch), cfg);
    detail::engine eng(world);
    auto res = eng.run();
    res.metrics.replication = replication;
    return res;
}

/// Mean and 95% confidence interval of each replication metric.
struct sim_summary {
    confidence_interval efficiency;
    confidence_interval power;
    std::size_t replications = 0;
};

inline sim_summary aggregate(std::span<const sim_metrics> reps, double level = 0.95)
{
    if (reps.size() < 2)
        throw domain_error("aggregate needs at least two replications");
    std::vector<double> eff;
    std::vector<double> pow;
    for (const auto& m : reps) {
        eff.push_back(m.offloading_efficiency);
        pow.push_back(m.mean_tx_power);
    }
    sim_summary s;
    s.efficiency = mean_confidence_interval(eff, level);
    s.power = mean_confidence_interval(pow, level);
    s.replications = reps.size();
    return s;
}

} // namespace d2doff::sim
