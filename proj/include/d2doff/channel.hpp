#pragma once

// Deterministic distance-to-gain laws. All models are strictly decreasing in
// distance; the analytic power expressions use g_dB, its inverse and its
// derivative.

#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "d2doff/errors.hpp"

namespace d2doff {

class channel_model {
public:
    virtual ~channel_model() = default;

    /// Nominal gain at distance d [m], in dB (negative of the path loss).
    virtual double g_db(double d) const = 0;

    /// d/dd g_db(d) [dB/m]; negative everywhere.
    virtual double g_db_derivative(double d) const = 0;

    /// Distance at which g_db equals y. The generic version bisects in log
    /// distance over [min_distance, max_distance]; values beyond the bracket
    /// clamp to its ends.
    virtual double g_db_inverse(double y) const
    {
        double lo = min_distance;
        double hi = max_distance;
        if (y >= g_db(lo))
            return lo;
        if (y <= g_db(hi))
            return hi;
        while (hi - lo > 1e-10 && hi - lo > 1e-14 * hi) {
            const double mid = std::sqrt(lo * hi);
            const double m = (mid > lo && mid < hi) ? mid : 0.5 * (lo + hi);
            if (g_db(m) > y)
                lo = m;
            else
                hi = m;
        }
        return 0.5 * (lo + hi);
    }

    virtual std::string name() const = 0;

    static constexpr double min_distance = 1e-12;
    static constexpr double max_distance = 1e9;
};

/// g_dB(d) = -(pl0_db + 10 n log10(d / 1 m)).
class log_distance_channel final : public channel_model {
public:
    log_distance_channel(double pl0_db, double exponent, double carrier_ghz = 2.3)
        : pl0_db_(pl0_db)
        , n_(exponent)
        , carrier_ghz_(carrier_ghz)
    {
        if (!std::isfinite(pl0_db) || !(exponent > 0.0) || !std::isfinite(exponent))
            throw config_error("log-distance channel needs finite pl0_db and exponent > 0");
    }

    double g_db(double d) const override { return -(pl0_db_ + 10.0 * n_ * std::log10(d)); }

    double g_db_derivative(double d) const override
    {
        return -10.0 * n_ / (d * std::numbers::ln10);
    }

    double g_db_inverse(double y) const override
    {
        return std::pow(10.0, (-y - pl0_db_) / (10.0 * n_));
    }

    std::string name() const override { return "log_distance"; }

    double pl0_db() const noexcept { return pl0_db_; }
    double exponent() const noexcept { return n_; }
    double carrier_ghz() const noexcept { return carrier_ghz_; }

private:
    double pl0_db_;
    double n_;
    double carrier_ghz_;
};

/// Two log-distance slopes joined continuously at a breakpoint distance. Uses
/// the generic bisection inverse.
class dual_slope_channel final : public channel_model {
public:
    dual_slope_channel(double pl0_db, double near_exponent, double far_exponent, double breakpoint_m)
        : pl0_db_(pl0_db)
        , n1_(near_exponent)
        , n2_(far_exponent)
        , d_bp_(breakpoint_m)
    {
        if (!std::isfinite(pl0_db) || !(n1_ > 0.0) || !(n2_ > 0.0) || !(d_bp_ > 0.0))
            throw config_error("dual-slope channel needs finite pl0_db, positive exponents and breakpoint");
    }

    double g_db(double d) const override
    {
        if (d <= d_bp_)
            return -(pl0_db_ + 10.0 * n1_ * std::log10(d));
        return -(pl0_db_ + 10.0 * n1_ * std::log10(d_bp_) + 10.0 * n2_ * std::log10(d / d_bp_));
    }

    double g_db_derivative(double d) const override
    {
        const double n = d <= d_bp_ ? n1_ : n2_;
        return -10.0 * n / (d * std::numbers::ln10);
    }

    std::string name() const override { return "dual_slope"; }

private:
    double pl0_db_;
    double n1_;
    double n2_;
    double d_bp_;
};

/// Default law at 2.3 GHz: UMi-LOS-like log-distance fit.
inline std::shared_ptr<const channel_model> default_channel()
{
    return std::make_shared<log_distance_channel>(34.23, 2.27, 2.3);
}

/// Linear gain 10^(g_dB(d)/10).
inline double gain_linear(const channel_model& ch, double d)
{
    if (!(d > 0.0))
        throw domain_error("gain_linear: distance must be > 0");
    return std::pow(10.0, ch.g_db(d) / 10.0);
}

} // namespace d2doff
