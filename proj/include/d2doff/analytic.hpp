#pragma once

// Closed-form and numerically integrated model of D2D offloading on a 1-D
// street: vehicle density and encounter rates, per-content cache occupancy,
// immediate/delayed/infrastructure delivery probabilities, per-subcarrier
// transmit power and its library-wide average as a function of the maximum
// D2D range.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "d2doff/channel.hpp"
#include "d2doff/domain.hpp"
#include "d2doff/errors.hpp"
#include "d2doff/optimize.hpp"
#include "d2doff/quadrature.hpp"

namespace d2doff {

/// Which side of the cache-occupancy bracket feeds the composed formulas.
enum class cache_bound { lower, upper };

struct model_params {
    scenario_params scenario;
    radio_params radio;
    std::shared_ptr<const channel_model> channel = default_channel();
    cache_bound bound = cache_bound::lower;
    quadrature_spec quad;

    void validate() const
    {
        scenario.validate();
        radio.validate();
        quad.validate();
        if (!channel)
            throw config_error("no channel model configured");
    }
};

/// Delivery-mode probabilities of a non-repeated request.
struct offload_breakdown {
    double p_off_imm = 0.0;
    double p_off_del = 0.0;
    double p_non_off = 1.0;

    double p_off() const noexcept { return p_off_imm + p_off_del; }
};

/// Mean per-subcarrier transmit power of each delivery mode and their
/// probability-weighted total [mW].
struct power_breakdown {
    double mean_imm = 0.0;
    double power_del = 0.0;
    double mean_non_off = 0.0;
    double total = 0.0;
};

struct cache_probability_range {
    double lower = 0.0;
    double upper = 0.0;
};

// ---------------------------------------------------------------------------
// Vehicle density and encounter rates

/// Linear vehicle density for a uniform speed law,
/// lambda_t (ln v_b - ln v_a) / (v_b - v_a); lambda_t / v in the single-speed limit.
inline double spatial_density_closed_form(double lambda_t, const speed_distribution& speed)
{
    if (!speed.is_uniform())
        throw domain_error("closed-form spatial density needs a uniform speed law");
    const double va = speed.v_a();
    const double vb = speed.v_b();
    if (speed.is_degenerate())
        return lambda_t / va;
    return lambda_t * std::log1p((vb - va) / va) / (vb - va);
}

/// Linear vehicle density lambda_t * E[1/|V|] by quadrature over the speed law.
inline double spatial_density_integral(double lambda_t, const speed_distribution& speed,
                                       const quadrature_spec& quad = {})
{
    if (speed.touches_zero())
        throw divergence_error("speed density is positive at v = 0: 1/|v| is not integrable");
    if (speed.is_degenerate())
        return lambda_t / speed.v_a();
    const auto pts = speed.breakpoints();
    auto f = [&](double v) {
        const double p = speed.pdf(v);
        return p == 0.0 ? 0.0 : p / std::abs(v);
    };
    return lambda_t * integrate_pieces(f, pts, quad);
}

inline double spatial_density(double lambda_t, const speed_distribution& speed,
                              const quadrature_spec& quad = {})
{
    if (lambda_t < 0.0)
        throw domain_error("spatial_density: lambda_t must be >= 0");
    if (speed.is_uniform())
        return spatial_density_closed_form(lambda_t, speed);
    return spatial_density_integral(lambda_t, speed, quad);
}

/// Encounter rate for a uniform speed law; valid only for v_a <= |v*| <= v_b.
inline double encounter_rate_closed_form(double v_star, double lambda_t, const speed_distribution& speed)
{
    if (!speed.is_uniform())
        throw domain_error("closed-form encounter rate needs a uniform speed law");
    const double va = speed.v_a();
    const double vb = speed.v_b();
    const double a = std::abs(v_star);
    if (a < va || a > vb)
        throw domain_error("closed-form encounter rate only holds for v_a <= |v*| <= v_b");
    if (speed.is_degenerate())
        return lambda_t;
    return lambda_t / (vb - va) * (a * (std::log(a / va) - 1.0) + vb);
}

/// lambda_t * integral of p_V(v) |v* - v| / |v| dv, split at the kink v = v*.
inline double encounter_rate_integral(double v_star, double lambda_t, const speed_distribution& speed,
                                      const quadrature_spec& quad = {})
{
    if (speed.touches_zero())
        throw divergence_error("speed density is positive at v = 0: encounter integral diverges");
    if (speed.is_degenerate()) {
        const double v0 = speed.v_a();
        return 0.5 * lambda_t * (std::abs(v_star - v0) + std::abs(v_star + v0)) / v0;
    }
    auto pts = speed.breakpoints();
    if (v_star > pts.front() && v_star < pts.back())
        pts.push_back(v_star);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    auto f = [&](double v) {
        const double p = speed.pdf(v);
        return p == 0.0 ? 0.0 : p * std::abs(v_star - v) / std::abs(v);
    };
    return lambda_t * integrate_pieces(f, pts, quad);
}

/// Rate at which a vehicle moving at v* meets other vehicles. Closed form
/// where it is valid, quadrature elsewhere.
inline double encounter_rate(double v_star, double lambda_t, const speed_distribution& speed,
                             const quadrature_spec& quad = {})
{
    if (lambda_t < 0.0)
        throw domain_error("encounter_rate: lambda_t must be >= 0");
    const double a = std::abs(v_star);
    if (speed.is_uniform() && a >= speed.v_a() && a <= speed.v_b())
        return encounter_rate_closed_form(v_star, lambda_t, speed);
    return encounter_rate_integral(v_star, lambda_t, speed, quad);
}

// ---------------------------------------------------------------------------
// Per-content request rate and cache occupancy

inline double content_request_rate(std::size_t z, const popularity_model& pop, double lambda_Z)
{
    return pop.pmf(z) * lambda_Z;
}

/// Probability that a device caches content z: at least one request in
/// [t - tau_s, t - tau_c] (lower) or in [t - tau_s, t] (upper).
inline cache_probability_range cache_probability_bounds(double lambda_z, double tau_s, double tau_c)
{
    if (!(lambda_z >= 0.0) || !(tau_c >= 0.0) || !(tau_s >= tau_c))
        throw domain_error("cache_probability_bounds: need lambda_z >= 0 and 0 <= tau_c <= tau_s");
    return {-std::expm1(-lambda_z * (tau_s - tau_c)), -std::expm1(-lambda_z * tau_s)};
}

inline double cache_probability(double lambda_z, double tau_s, double tau_c, cache_bound bound = cache_bound::lower)
{
    const auto r = cache_probability_bounds(lambda_z, tau_s, tau_c);
    return bound == cache_bound::lower ? r.lower : r.upper;
}

/// Density of devices caching content z: the vehicle density thinned by the
/// cache probability.
inline double content_density(double rho, double lambda_z, double tau_s, double tau_c,
                              cache_bound bound = cache_bound::lower)
{
    if (rho < 0.0)
        throw domain_error("content_density: rho must be >= 0");
    return rho * cache_probability(lambda_z, tau_s, tau_c, bound);
}

/// Rate of encounters with devices caching content z.
inline double content_encounter_rate(double lambda_e, double lambda_z, double tau_s, double tau_c,
                                     cache_bound bound = cache_bound::lower)
{
    if (lambda_e < 0.0)
        throw domain_error("content_encounter_rate: lambda_e must be >= 0");
    return lambda_e * cache_probability(lambda_z, tau_s, tau_c, bound);
}

/// Cache probability of every content in the library, index 0 = content 1.
inline std::vector<double> cache_probabilities(const model_params& p)
{
    const auto& sc = p.scenario;
    std::vector<double> out(sc.popularity.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = cache_probability(sc.popularity.pmf()[i] * sc.lambda_Z, sc.tau_s, sc.tau_c, p.bound);
    return out;
}

// ---------------------------------------------------------------------------
// Offloading probabilities

/// Nearest holder within d_max: 1 - exp(-2 d_max rho_z).
inline double prob_offload_immediate(double d_max, double rho_z)
{
    if (!(d_max >= 0.0) || !(rho_z >= 0.0))
        throw domain_error("prob_offload_immediate: d_max and rho_z must be >= 0");
    if (std::isinf(rho_z))
        return d_max > 0.0 ? 1.0 : 0.0;
    return -std::expm1(-2.0 * d_max * rho_z);
}

namespace detail {

/// Speed-averaged probability of meeting a holder within tau_c, for a content
/// whose devices cache it with probability `cache_prob`.
inline double speed_averaged_encounter_probability(double cache_prob, const scenario_params& sc,
                                                   const quadrature_spec& quad)
{
    if (sc.tau_c == 0.0 || cache_prob == 0.0 || sc.lambda_t == 0.0)
        return 0.0;
    const auto& speed = sc.speed;
    auto p_enc = [&](double v) {
        return -std::expm1(-encounter_rate(v, sc.lambda_t, speed, quad) * cache_prob * sc.tau_c);
    };
    if (speed.is_degenerate())
        return p_enc(speed.v_a());
    if (speed.is_uniform()) {
        // symmetric law: both branches contribute the same integral
        const double va = speed.v_a();
        const double vb = speed.v_b();
        return integrate(p_enc, va, vb, quad) / (vb - va);
    }
    const auto pts = speed.breakpoints();
    auto f = [&](double v) { return p_enc(v) * speed.pdf(v); };
    return integrate_pieces(f, pts, quad);
}

} // namespace detail

/// Probability that a requester at speed v meets a holder of z within tau_c.
inline double prob_encounter_given_speed(std::size_t z, double v, const model_params& p)
{
    const auto& sc = p.scenario;
    if (sc.tau_c == 0.0)
        return 0.0;
    const double lambda_z = content_request_rate(z, sc.popularity, sc.lambda_Z);
    const double lambda_e = encounter_rate(v, sc.lambda_t, sc.speed, p.quad);
    const double rate = content_encounter_rate(lambda_e, lambda_z, sc.tau_s, sc.tau_c, p.bound);
    return -std::expm1(-rate * sc.tau_c);
}

inline double content_density_of(std::size_t z, const model_params& p)
{
    const auto& sc = p.scenario;
    const double rho = spatial_density(sc.lambda_t, sc.speed, p.quad);
    return content_density(rho, content_request_rate(z, sc.popularity, sc.lambda_Z), sc.tau_s, sc.tau_c, p.bound);
}

/// Not served immediately, then a holder is met before the content timeout.
inline double prob_offload_delayed(double d_max, std::size_t z, const model_params& p)
{
    const auto& sc = p.scenario;
    const double p_imm = prob_offload_immediate(d_max, content_density_of(z, p));
    if (sc.tau_c == 0.0 || p_imm == 1.0)
        return 0.0;
    const double c = cache_probability(content_request_rate(z, sc.popularity, sc.lambda_Z), sc.tau_s, sc.tau_c, p.bound);
    return (1.0 - p_imm) * detail::speed_averaged_encounter_probability(c, sc, p.quad);
}

namespace detail {

inline offload_breakdown compose_breakdown(double p_imm, double p_enc)
{
    offload_breakdown b;
    b.p_off_imm = p_imm;
    b.p_off_del = (1.0 - p_imm) * p_enc;
    b.p_non_off = (1.0 - p_imm) * (1.0 - p_enc);
    return b;
}

} // namespace detail

inline offload_breakdown offload_breakdown_for_content(double d_max, std::size_t z, const model_params& p)
{
    const auto& sc = p.scenario;
    const double c = cache_probability(content_request_rate(z, sc.popularity, sc.lambda_Z), sc.tau_s, sc.tau_c, p.bound);
    const double rho = spatial_density(sc.lambda_t, sc.speed, p.quad);
    const double p_imm = prob_offload_immediate(d_max, rho * c);
    const double p_enc = p_imm == 1.0 ? 0.0 : detail::speed_averaged_encounter_probability(c, sc, p.quad);
    return detail::compose_breakdown(p_imm, p_enc);
}

/// Probability that a request is not for a content already in the requester's cache.
inline double prob_non_repeated(const popularity_model& pop, std::span<const double> cache_probs)
{
    if (cache_probs.size() != pop.size())
        throw domain_error("prob_non_repeated: cache probabilities do not match the library size");
    double s = 0.0;
    for (std::size_t i = 0; i < pop.size(); ++i)
        s += pop.pmf()[i] * (1.0 - cache_probs[i]);
    return s;
}

/// Popularity of every content conditioned on the request not being repeated.
inline std::vector<double> popularity_given_non_repeated(const popularity_model& pop,
                                                         std::span<const double> cache_probs)
{
    const double norm = prob_non_repeated(pop, cache_probs);
    if (!(norm > 0.0))
        throw domain_error("every content is surely cached: no request can be non-repeated");
    std::vector<double> out(pop.size());
    for (std::size_t i = 0; i < pop.size(); ++i)
        out[i] = pop.pmf()[i] * (1.0 - cache_probs[i]) / norm;
    return out;
}

inline double popularity_given_non_repeated(std::size_t z, const popularity_model& pop,
                                            std::span<const double> cache_probs)
{
    const double pz = pop.pmf(z);
    const double norm = prob_non_repeated(pop, cache_probs);
    if (!(norm > 0.0))
        throw domain_error("every content is surely cached: no request can be non-repeated");
    return pz * (1.0 - cache_probs[z - 1]) / norm;
}

// ---------------------------------------------------------------------------
// Transmit power

/// Per-subcarrier power needed at unit gain: margin * sigma_c^2 * (2^e - 1) [mW].
inline double unit_gain_power(const radio_params& radio)
{
    return db_to_linear(radio.link_margin_db) * sigma_c_squared(radio) * std::expm1(radio.e_bar * std::numbers::ln2);
}

/// Power per subcarrier to sustain e_bar over distance d.
inline double subcarrier_tx_power(double d, const radio_params& radio, const channel_model& ch)
{
    if (!(d > 0.0))
        throw domain_error("subcarrier_tx_power: distance must be > 0");
    return unit_gain_power(radio) * std::pow(10.0, -ch.g_db(d) / 10.0);
}

namespace detail {

/// Distance at which the required power equals y.
inline double distance_for_power(double y, const radio_params& radio, const channel_model& ch)
{
    return ch.g_db_inverse(linear_to_db(unit_gain_power(radio) / y));
}

} // namespace detail

/// CDF of the immediate-delivery power: nearest holder distance conditioned on
/// being within d_max, mapped through the power law.
inline double power_imm_cdf(double y, double d_max, double rho_z, const radio_params& radio, const channel_model& ch)
{
    if (!(d_max > 0.0) || !(rho_z >= 0.0))
        throw domain_error("power_imm_cdf: need d_max > 0 and rho_z >= 0");
    if (y <= 0.0)
        return 0.0;
    if (y >= subcarrier_tx_power(d_max, radio, ch))
        return 1.0;
    const double d = std::min(detail::distance_for_power(y, radio, ch), d_max);
    if (rho_z == 0.0)
        return d / d_max;
    return std::expm1(-2.0 * rho_z * d) / std::expm1(-2.0 * rho_z * d_max);
}

inline double power_imm_pdf(double y, double d_max, double rho_z, const radio_params& radio, const channel_model& ch)
{
    if (!(d_max > 0.0) || !(rho_z >= 0.0))
        throw domain_error("power_imm_pdf: need d_max > 0 and rho_z >= 0");
    if (y <= 0.0 || y >= subcarrier_tx_power(d_max, radio, ch))
        return 0.0;
    const double d = detail::distance_for_power(y, radio, ch);
    // density of the truncated nearest-neighbour distance times |dd/dy|
    const double dist_pdf = rho_z == 0.0 ? 1.0 / d_max
                                         : 2.0 * rho_z * std::exp(-2.0 * rho_z * d) / -std::expm1(-2.0 * rho_z * d_max);
    const double dd_dy = -10.0 / (std::numbers::ln10 * y * ch.g_db_derivative(d));
    return dist_pdf * dd_dy;
}

inline double power_non_off_cdf(double y, double d_max_i2d, const radio_params& radio, const channel_model& ch)
{
    if (!(d_max_i2d > 0.0))
        throw domain_error("power_non_off_cdf: cell radius must be > 0");
    if (y <= 0.0)
        return 0.0;
    if (y >= subcarrier_tx_power(d_max_i2d, radio, ch))
        return 1.0;
    return std::min(detail::distance_for_power(y, radio, ch) / d_max_i2d, 1.0);
}

inline double power_non_off_pdf(double y, double d_max_i2d, const radio_params& radio, const channel_model& ch)
{
    if (!(d_max_i2d > 0.0))
        throw domain_error("power_non_off_pdf: cell radius must be > 0");
    if (y <= 0.0 || y >= subcarrier_tx_power(d_max_i2d, radio, ch))
        return 0.0;
    const double d = detail::distance_for_power(y, radio, ch);
    return -10.0 / (std::numbers::ln10 * y * d_max_i2d * ch.g_db_derivative(d));
}

/// Mean infrastructure power, distance uniform on [0, d_max_i2d]:
/// P(d_max_i2d) minus the integration-by-parts dB tail integral.
inline double mean_power_non_off(double d_max_i2d, const radio_params& radio, const channel_model& ch,
                                 const quadrature_spec& quad = {})
{
    if (!(d_max_i2d > 0.0))
        throw domain_error("mean_power_non_off: cell radius must be > 0");
    const double y0 = ch.g_db(d_max_i2d);
    const double p_edge = subcarrier_tx_power(d_max_i2d, radio, ch);
    auto inv = [&](double y) { return ch.g_db_inverse(y); };
    const double scaled = integrate_db_tail_scaled(inv, inv, y0, quad);
    const double mean = p_edge - p_edge / d_max_i2d * (std::numbers::ln10 / 10.0) * scaled;
    if (mean < -1e-9 * p_edge)
        throw numeric_error("mean_power_non_off came out negative: " + std::to_string(mean));
    return std::max(mean, 0.0);
}

/// Mean immediate-delivery power for nearest-holder density rho_z and range
/// d_max. The first (negative) term and the dB tail integral are evaluated as
/// written; when 2 rho_z d_max underflows the cancellation the distance law
/// is uniform on [0, d_max] and the infrastructure formula is reused.
inline double mean_power_imm(double d_max, double rho_z, const radio_params& radio, const channel_model& ch,
                             const quadrature_spec& quad = {})
{
    if (!(d_max > 0.0) || !(rho_z >= 0.0))
        throw domain_error("mean_power_imm: need d_max > 0 and rho_z >= 0");
    const double x = 2.0 * rho_z * d_max;
    if (x < 1e-7)
        return mean_power_non_off(d_max, radio, ch, quad);
    const double y0 = ch.g_db(d_max);
    const double p_edge = subcarrier_tx_power(d_max, radio, ch);
    const double first = p_edge / -std::expm1(x);
    auto cof = [&](double y) { return std::exp(-2.0 * rho_z * ch.g_db_inverse(y)); };
    auto sup = [](double) { return 1.0; };
    const double scaled = integrate_db_tail_scaled(cof, sup, y0, quad);
    const double second = p_edge / -std::expm1(-x) * (std::numbers::ln10 / 10.0) * scaled;
    const double mean = first + second;
    if (mean < -1e-9 * p_edge)
        throw numeric_error("mean_power_imm came out negative: " + std::to_string(mean));
    return std::max(mean, 0.0);
}

/// Delayed deliveries happen as the holder enters range, i.e. at exactly d_max.
inline double power_delayed(double d_max, const radio_params& radio, const channel_model& ch)
{
    return subcarrier_tx_power(d_max, radio, ch);
}

namespace detail {

inline power_breakdown compose_power(const offload_breakdown& b, double mean_imm, double p_del, double mean_non)
{
    power_breakdown pw;
    pw.mean_imm = mean_imm;
    pw.power_del = p_del;
    pw.mean_non_off = mean_non;
    pw.total = b.p_off_imm * mean_imm + b.p_off_del * p_del + b.p_non_off * mean_non;
    return pw;
}

} // namespace detail

inline power_breakdown avg_power_for_content(double d_max, std::size_t z, const model_params& p)
{
    const auto b = offload_breakdown_for_content(d_max, z, p);
    const auto& ch = *p.channel;
    const double mean_non = mean_power_non_off(p.radio.d_max_i2d, p.radio, ch, p.quad);
    if (d_max == 0.0)
        return detail::compose_power(b, 0.0, 0.0, mean_non);
    const double rho_z = content_density_of(z, p);
    return detail::compose_power(b, mean_power_imm(d_max, rho_z, p.radio, ch, p.quad),
                                 power_delayed(d_max, p.radio, ch), mean_non);
}

// ---------------------------------------------------------------------------
// Library-wide aggregation

/// Precomputes the d_max-independent part of the model for a whole library so
/// sweeps over d_max only pay for the immediate-delivery terms. Contents with
/// equal request rate share one group; with `buckets > 0` request rates are
/// additionally merged into that many log-spaced bins.
class library_model {
public:
    explicit library_model(const model_params& p, std::size_t buckets = 0)
        : params_(p)
    {
        p.validate();
        const auto& sc = p.scenario;
        rho_ = d2doff::spatial_density(sc.lambda_t, sc.speed, p.quad);
        const auto probs = cache_probabilities(p);
        const auto weights = popularity_given_non_repeated(sc.popularity, probs);
        p_nr_ = d2doff::prob_non_repeated(sc.popularity, probs);

        // (weight, weighted request rate) per key
        std::map<double, std::pair<double, double>> acc;
        const auto pmf = sc.popularity.pmf();
        double lo = std::numeric_limits<double>::infinity();
        double hi = 0.0;
        for (double q : pmf) {
            if (q > 0.0) {
                lo = std::min(lo, q);
                hi = std::max(hi, q);
            }
        }
        for (std::size_t i = 0; i < pmf.size(); ++i) {
            if (weights[i] == 0.0)
                continue;
            const double lz = pmf[i] * sc.lambda_Z;
            double key = lz;
            if (buckets > 0 && hi > lo) {
                const double pos = std::log(pmf[i] / lo) / std::log(hi / lo);
                key = std::floor(std::min(pos, 1.0 - 1e-12) * static_cast<double>(buckets));
            }
            auto& slot = acc[key];
            slot.first += weights[i];
            slot.second += weights[i] * lz;
        }
        groups_.reserve(acc.size());
        for (const auto& [key, wl] : acc) {
            group g;
            g.weight = wl.first;
            const double lz = wl.second / wl.first;
            g.cache_prob = cache_probability(lz, sc.tau_s, sc.tau_c, p.bound);
            g.rho_z = rho_ * g.cache_prob;
            g.p_enc = detail::speed_averaged_encounter_probability(g.cache_prob, sc, p.quad);
            groups_.push_back(g);
        }
        mean_non_off_ = d2doff::mean_power_non_off(p.radio.d_max_i2d, p.radio, *p.channel, p.quad);
    }

    double spatial_density() const noexcept { return rho_; }
    double prob_non_repeated() const noexcept { return p_nr_; }
    std::size_t group_count() const noexcept { return groups_.size(); }
    double mean_power_non_off() const noexcept { return mean_non_off_; }

    /// Delivery-mode probabilities averaged over the conditional popularity.
    offload_breakdown offload(double d_max) const
    {
        offload_breakdown agg{0.0, 0.0, 0.0};
        for (const auto& g : groups_) {
            const auto b = detail::compose_breakdown(prob_offload_immediate(d_max, g.rho_z), g.p_enc);
            agg.p_off_imm += g.weight * b.p_off_imm;
            agg.p_off_del += g.weight * b.p_off_del;
            agg.p_non_off += g.weight * b.p_non_off;
        }
        return agg;
    }

    double prob_offload_given_nr(double d_max) const { return offload(d_max).p_off(); }

    /// Library-averaged power. Branch means are conditional on the branch, so
    /// total == sum of offload(d_max) probabilities times branch means.
    power_breakdown power(double d_max) const
    {
        if (!(d_max >= 0.0))
            throw domain_error("library_model::power: d_max must be >= 0");
        const auto& ch = *params_.channel;
        const double p_del = d_max > 0.0 ? power_delayed(d_max, params_.radio, ch) : 0.0;
        double w_imm = 0.0;
        double e_imm = 0.0;
        power_breakdown out;
        for (const auto& g : groups_) {
            const auto b = detail::compose_breakdown(prob_offload_immediate(d_max, g.rho_z), g.p_enc);
            const double m_imm = (d_max > 0.0 && b.p_off_imm > 0.0)
                ? mean_power_imm(d_max, g.rho_z, params_.radio, ch, params_.quad)
                : 0.0;
            w_imm += g.weight * b.p_off_imm;
            e_imm += g.weight * b.p_off_imm * m_imm;
            out.total += g.weight * (b.p_off_imm * m_imm + b.p_off_del * p_del + b.p_non_off * mean_non_off_);
        }
        out.mean_imm = w_imm > 0.0 ? e_imm / w_imm : 0.0;
        out.power_del = p_del;
        out.mean_non_off = mean_non_off_;
        return out;
    }

    double avg_power(double d_max) const { return power(d_max).total; }

private:
    struct group {
        double weight = 0.0; ///< conditional popularity given non-repeated
        double cache_prob = 0.0;
        double rho_z = 0.0;
        double p_enc = 0.0; ///< speed-averaged encounter probability within tau_c
    };

    model_params params_;
    double rho_ = 0.0;
    double p_nr_ = 0.0;
    double mean_non_off_ = 0.0;
    std::vector<group> groups_;
};

/// Offloading probability of a non-repeated request, whole library.
inline double prob_offload_given_nr(double d_max, const model_params& p)
{
    return library_model(p).prob_offload_given_nr(d_max);
}

/// Average per-subcarrier power of a non-repeated request, whole library.
inline double avg_power(double d_max, const model_params& p)
{
    return library_model(p).avg_power(d_max);
}

struct search_interval {
    double lo = 20.0;
    double hi = 300.0;
};

/// Range minimizing the average power over `interval` (0.1 m tolerance).
inline minimum_result optimal_dmax(const library_model& lib, search_interval interval)
{
    return golden_section_minimize([&](double d) { return lib.avg_power(d); }, interval.lo, interval.hi, 0.1, 17);
}

inline minimum_result optimal_dmax(const model_params& p, search_interval interval)
{
    return optimal_dmax(library_model(p), interval);
}

} // namespace d2doff
