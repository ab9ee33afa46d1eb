#pragma once

// Brute-force Monte Carlo estimators. Nothing here calls into analytic.hpp:
// power is recomputed from the link budget directly and all point-process
// quantities come from explicit trajectories.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "d2doff/channel.hpp"
#include "d2doff/domain.hpp"
#include "d2doff/errors.hpp"

namespace d2doff::oracles {

struct oracle_estimate {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;
    bool flagged = false; ///< estimate is unreliable (horizon too short, too few events)
};

namespace detail {

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), 0x6f72u};
    return std::mt19937_64(seq);
}

// Arrival times of a Poisson process with `rate` on [t0, t1).
template <class URBG>
std::vector<double> poisson_times(double rate, double t0, double t1, URBG& rng)
{
    std::vector<double> ts;
    if (!(rate > 0.0) || !(t1 > t0))
        return ts;
    std::exponential_distribution<double> gap(rate);
    for (double t = t0 + gap(rng); t < t1; t += gap(rng))
        ts.push_back(t);
    return ts;
}

} // namespace detail

/// Vehicles per metre on a long road. Each of `snapshots` independent runs
/// feeds arrivals at both ends of a road of length v_min * horizon for
/// `horizon` seconds, then counts the vehicles still on it.
inline oracle_estimate mc_spatial_density(double lambda_t, const speed_distribution& speed, double horizon_s,
                                          std::uint64_t seed, std::size_t snapshots = 64)
{
    if (!(lambda_t >= 0.0) || !(horizon_s > 0.0) || snapshots < 2)
        throw domain_error("mc_spatial_density: need lambda_t >= 0, horizon > 0, >= 2 snapshots");
    oracle_estimate est;
    est.seed = seed;
    est.sample_count = snapshots;
    const double v_min = speed.min_abs_speed();
    const double road = v_min * horizon_s;
    if (!(road > 0.0)) {
        est.flagged = true;
        return est;
    }
    auto rng = detail::make_rng(seed);
    std::vector<double> dens;
    dens.reserve(snapshots);
    std::size_t total = 0;
    for (std::size_t s = 0; s < snapshots; ++s) {
        std::size_t on_road = 0;
        for (double t : detail::poisson_times(lambda_t, -horizon_s, 0.0, rng)) {
            const double v = speed.sample_magnitude(rng);
            if (v * (0.0 - t) <= road) // travelled less than the road length by t = 0
                ++on_road;
        }
        total += on_road;
        dens.push_back(static_cast<double>(on_road) / road);
    }
    double m = 0.0;
    for (double d : dens)
        m += d;
    m /= static_cast<double>(snapshots);
    double ss = 0.0;
    for (double d : dens)
        ss += (d - m) * (d - m);
    est.value = m;
    est.std_error = std::sqrt(ss / static_cast<double>(snapshots - 1) / static_cast<double>(snapshots));
    est.flagged = total < 100;
    return est;
}

/// Rate at which vehicles cross a probe moving at `v_star` and displaced by
/// `offset` metres from the origin, over `horizon_s` seconds. Vehicles enter
/// both ends of a road wide enough to hold the probe path.
inline oracle_estimate mc_encounter_rate(double v_star, double lambda_t, const speed_distribution& speed,
                                         double horizon_s, std::uint64_t seed, double offset = 0.0)
{
    if (!(lambda_t >= 0.0) || !(horizon_s > 0.0))
        throw domain_error("mc_encounter_rate: need lambda_t >= 0 and horizon > 0");
    oracle_estimate est;
    est.seed = seed;
    const double v_min = speed.min_abs_speed();
    if (!(v_min > 0.0)) {
        est.flagged = true;
        return est;
    }
    const double half = std::abs(v_star) * horizon_s + std::abs(offset) + 1000.0;
    const double t_fill = 2.0 * half / v_min; // oldest entry that can still be on the road at t = 0
    auto rng = detail::make_rng(seed, 1);
    std::size_t crossings = 0;
    for (int side = 0; side < 2; ++side) {
        const double sign = side == 0 ? 1.0 : -1.0; // entering at -half moving right, or at +half moving left
        for (double t_in : detail::poisson_times(0.5 * lambda_t, -t_fill, horizon_s, rng)) {
            const double v = sign * speed.sample_magnitude(rng);
            const double x_in = -sign * half;
            // x_in + v (t - t_in) == offset + v_star t
            if (v == v_star)
                continue;
            const double t_c = (x_in - v * t_in - offset) / (v_star - v);
            if (t_c < 0.0 || t_c >= horizon_s || t_c < t_in)
                continue;
            const double x_c = x_in + v * (t_c - t_in);
            if (std::abs(x_c) <= half)
                ++crossings;
        }
    }
    est.sample_count = crossings;
    est.value = static_cast<double>(crossings) / horizon_s;
    est.std_error = std::sqrt(static_cast<double>(crossings)) / horizon_s;
    est.flagged = crossings < 100;
    return est;
}

using distance_sampler = std::function<double(std::mt19937_64&)>;

inline distance_sampler constant_distance(double d)
{
    return [d](std::mt19937_64&) { return d; };
}

inline distance_sampler uniform_distance(double d_hi)
{
    return [d_hi](std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, d_hi)(rng); };
}

/// Distance from the origin to the closest point of a Poisson process of
/// density rho_z on [-d_max, d_max], conditioned on such a point existing.
/// Draws whole realizations and rejects the empty ones.
inline distance_sampler truncated_nearest_neighbor(double rho_z, double d_max)
{
    if (!(rho_z > 0.0) || !(d_max > 0.0))
        throw domain_error("truncated_nearest_neighbor: need rho_z > 0 and d_max > 0");
    return [rho_z, d_max](std::mt19937_64& rng) {
        std::poisson_distribution<long> count(2.0 * rho_z * d_max);
        std::uniform_real_distribution<double> pos(-d_max, d_max);
        for (;;) {
            const long n = count(rng);
            if (n == 0)
                continue;
            double best = std::numeric_limits<double>::infinity();
            for (long i = 0; i < n; ++i)
                best = std::min(best, std::abs(pos(rng)));
            return best;
        }
    };
}

/// Link-budget transmit power for distance d, evaluated from scratch.
inline double budget_power(double d, const radio_params& radio, const channel_model& ch)
{
    const double noise_mw = radio.w_c_hz * std::pow(10.0, (radio.n0_dbm_hz + radio.noise_figure_db) / 10.0);
    const double snr = std::pow(2.0, radio.e_bar) - 1.0;
    const double margin = std::pow(10.0, radio.link_margin_db / 10.0);
    return margin * noise_mw * snr * std::pow(10.0, -ch.g_db(d) / 10.0);
}

/// `n` powers obtained by pushing sampled distances through the link budget.
inline std::vector<double> sample_transform(const distance_sampler& sampler, const radio_params& radio,
                                            const channel_model& ch, std::size_t n, std::uint64_t seed)
{
    auto rng = detail::make_rng(seed, 2);
    std::vector<double> ys(n);
    for (auto& y : ys)
        y = budget_power(sampler(rng), radio, ch);
    return ys;
}

inline oracle_estimate mc_transform_mean(const distance_sampler& sampler, const radio_params& radio,
                                         const channel_model& ch, std::size_t n_samples, std::uint64_t seed)
{
    if (n_samples == 0)
        throw domain_error("mc_transform_mean: need at least one sample");
    const auto ys = sample_transform(sampler, radio, ch, n_samples, seed);
    double m = 0.0;
    for (double y : ys)
        m += y;
    m /= static_cast<double>(n_samples);
    double ss = 0.0;
    for (double y : ys)
        ss += (y - m) * (y - m);
    oracle_estimate est;
    est.value = m;
    est.std_error = n_samples > 1 ? std::sqrt(ss / static_cast<double>(n_samples - 1) / static_cast<double>(n_samples)) : 0.0;
    est.sample_count = n_samples;
    est.seed = seed;
    return est;
}

struct offload_estimate {
    oracle_estimate imm;
    oracle_estimate del; ///< holder first comes within d_max during (0, tau_c]
};

/// Fresh requester at the origin with a speed drawn from the two-sided law,
/// holders a stationary road population (built from end arrivals) each
/// marked with probability `cache_prob`. One-dimensional distances.
inline offload_estimate mc_offload_probabilities(double lambda_t, const speed_distribution& speed, double cache_prob,
                                                 double d_max, double tau_c, std::size_t trials, std::uint64_t seed)
{
    if (!(lambda_t >= 0.0) || !(cache_prob >= 0.0 && cache_prob <= 1.0) || !(d_max >= 0.0) || !(tau_c >= 0.0)
        || trials < 2)
        throw domain_error("mc_offload_probabilities: invalid arguments");
    const double v_min = speed.min_abs_speed();
    const double v_max = std::max(std::abs(speed.support_min()), std::abs(speed.support_max()));
    if (!(v_min > 0.0))
        throw domain_error("mc_offload_probabilities: speed law must stay away from 0");
    const double half = d_max + 2.0 * v_max * tau_c + 100.0;
    const double pre = 2.0 * half / v_min;
    auto rng = detail::make_rng(seed, 4);
    std::bernoulli_distribution marked(cache_prob);
    std::size_t n_imm = 0;
    std::size_t n_del = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const double vr = speed.sample_signed(rng);
        bool imm = false;
        bool del = false;
        for (int side = 0; side < 2 && !imm; ++side) {
            const double sign = side == 0 ? 1.0 : -1.0;
            const double x_in = -sign * half;
            for (double t_in : detail::poisson_times(0.5 * lambda_t, -pre, tau_c, rng)) {
                if (!marked(rng))
                    continue;
                const double v = sign * speed.sample_magnitude(rng);
                // road position relative to the requester over [max(0, t_in), tau_c]
                const double t0 = std::max(0.0, t_in);
                const double t_exit = t_in + 2.0 * half / std::abs(v);
                if (t_exit <= t0)
                    continue;
                const double t1 = std::min(tau_c, t_exit);
                const double r0 = x_in + v * (t0 - t_in) - vr * t0;
                const double r1 = x_in + v * (t1 - t_in) - vr * t1;
                if (t_in <= 0.0 && std::abs(r0) <= d_max) {
                    imm = true;
                    break;
                }
                if (std::min(r0, r1) <= d_max && std::max(r0, r1) >= -d_max)
                    del = true;
            }
        }
        n_imm += imm ? 1 : 0;
        n_del += (!imm && del) ? 1 : 0;
    }
    auto make = [&](std::size_t k) {
        oracle_estimate e;
        const double n = static_cast<double>(trials);
        e.value = static_cast<double>(k) / n;
        e.std_error = std::sqrt(e.value * (1.0 - e.value) / n);
        e.sample_count = trials;
        e.seed = seed;
        e.flagged = k < 30;
        return e;
    };
    return {make(n_imm), make(n_del)};
}

enum class delivery_delay { instant, content_timeout };

/// Time-average probability that one device holds a given content. Requests
/// arrive at rate lambda_z; a request for an absent, not yet pending content
/// is fulfilled after 0 or tau_c seconds; the copy is dropped tau_s after
/// the most recent receipt or repeated request. The std_error comes from 32
/// batch means.
inline oracle_estimate mc_cache_occupancy(double lambda_z, double tau_s, double tau_c, double horizon_s,
                                          std::uint64_t seed, delivery_delay delay = delivery_delay::content_timeout)
{
    if (!(lambda_z >= 0.0) || !(tau_c >= 0.0) || !(tau_s >= tau_c) || !(horizon_s > 0.0))
        throw domain_error("mc_cache_occupancy: need lambda_z >= 0, 0 <= tau_c <= tau_s, horizon > 0");
    constexpr std::size_t batches = 32;
    oracle_estimate est;
    est.seed = seed;
    auto rng = detail::make_rng(seed, 3);
    const double lag = delay == delivery_delay::instant ? 0.0 : tau_c;
    const double batch_len = horizon_s / batches;
    std::vector<double> held(batches, 0.0);

    // credit [a, b) of cached time to the batches it overlaps
    auto credit = [&](double a, double b) {
        a = std::max(a, 0.0);
        b = std::min(b, horizon_s);
        while (a < b) {
            const auto k = std::min(static_cast<std::size_t>(a / batch_len), batches - 1);
            const double end = std::min(b, static_cast<double>(k + 1) * batch_len);
            held[k] += end - a;
            a = end;
        }
    };

    const auto reqs = detail::poisson_times(lambda_z, 0.0, horizon_s, rng);
    double cached_from = 0.0;
    double cached_until = -1.0; // no copy
    double pending_until = -1.0;
    for (double t : reqs) {
        if (t < pending_until)
            continue;
        if (t < cached_until) {
            cached_until = t + tau_s;
            continue;
        }
        if (cached_until >= 0.0) {
            credit(cached_from, cached_until);
            cached_until = -1.0;
        }
        pending_until = t + lag;
        cached_from = t + lag;
        cached_until = t + lag + tau_s;
    }
    if (cached_until >= 0.0)
        credit(cached_from, cached_until);

    double m = 0.0;
    for (auto& h : held) {
        h /= batch_len;
        m += h;
    }
    m /= batches;
    double ss = 0.0;
    for (double h : held)
        ss += (h - m) * (h - m);
    est.value = m;
    est.std_error = std::sqrt(ss / (batches - 1) / batches);
    est.sample_count = reqs.size();
    est.flagged = horizon_s < 20.0 * tau_s;
    return est;
}

} // namespace d2doff::oracles
