#pragma once

// Model parameters shared by the analytic engine, the simulator and the CLI:
// vehicle speed law, content popularity, scenario timing and radio budget.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "d2doff/errors.hpp"

namespace d2doff {

namespace detail {

/// Piecewise-linear density on a sorted grid, sampled by exact inversion of
/// the per-segment quadratic CDF.
class piecewise_linear_table {
public:
    piecewise_linear_table() = default;

    piecewise_linear_table(std::vector<double> xs, std::vector<double> fs)
        : xs_(std::move(xs))
        , fs_(std::move(fs))
        , cum_(xs_.size(), 0.0)
    {
        for (std::size_t i = 1; i < xs_.size(); ++i)
            cum_[i] = cum_[i - 1] + 0.5 * (fs_[i - 1] + fs_[i]) * (xs_[i] - xs_[i - 1]);
    }

    double total() const { return cum_.empty() ? 0.0 : cum_.back(); }

    template <class URBG>
    double sample(URBG& rng) const
    {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double target = unit(rng) * total();
        auto it = std::upper_bound(cum_.begin(), cum_.end(), target);
        std::size_t seg = static_cast<std::size_t>(std::distance(cum_.begin(), it));
        seg = std::clamp<std::size_t>(seg, 1, xs_.size() - 1);
        // skip zero-mass segments that upper_bound may land on at the edges
        while (seg + 1 < xs_.size() && cum_[seg] == cum_[seg - 1])
            ++seg;
        const double x0 = xs_[seg - 1];
        const double h = xs_[seg] - x0;
        const double f0 = fs_[seg - 1];
        const double slope = (fs_[seg] - f0) / h;
        const double area = std::clamp(target - cum_[seg - 1], 0.0, cum_[seg] - cum_[seg - 1]);
        // f0 t + slope t^2 / 2 = area, stable root
        const double disc = std::max(0.0, f0 * f0 + 2.0 * slope * area);
        const double denom = f0 + std::sqrt(disc);
        const double t = denom > 0.0 ? 2.0 * area / denom : 0.0;
        return x0 + std::clamp(t, 0.0, h);
    }

private:
    std::vector<double> xs_;
    std::vector<double> fs_;
    std::vector<double> cum_;
};

} // namespace detail

/// Vehicle speed law. Speeds are signed: the sign carries the direction of
/// travel, so pdf() is the two-sided density p_V and one_sided_pdf() the
/// density of the speed magnitude.
class speed_distribution {
public:
    enum class kind { uniform, tabulated };

    /// Magnitude uniform on [v_a, v_b], direction equiprobable. v_a == v_b is
    /// accepted as the single-speed limit.
    static speed_distribution uniform(double v_a, double v_b)
    {
        if (!(v_a > 0.0) || !(v_b >= v_a) || !std::isfinite(v_b))
            throw domain_error("uniform speed law needs 0 < v_a <= v_b");
        speed_distribution d;
        d.kind_ = kind::uniform;
        d.v_a_ = v_a;
        d.v_b_ = v_b;
        return d;
    }

    /// Piecewise-linear two-sided density through (speeds[i], pdf[i]);
    /// normalized on construction.
    static speed_distribution tabulated(std::vector<double> speeds, std::vector<double> pdf)
    {
        if (speeds.size() < 2 || speeds.size() != pdf.size())
            throw domain_error("tabulated speed law needs >= 2 matching (speed, pdf) samples");
        for (std::size_t i = 0; i < speeds.size(); ++i) {
            if (!std::isfinite(speeds[i]) || !(pdf[i] >= 0.0) || !std::isfinite(pdf[i]))
                throw domain_error("tabulated speed law: non-finite or negative sample");
            if (i > 0 && !(speeds[i] > speeds[i - 1]))
                throw domain_error("tabulated speed law: speeds must be strictly increasing");
        }
        // insert an explicit node at 0 so no segment straddles the origin
        for (std::size_t i = 1; i < speeds.size(); ++i) {
            if (speeds[i - 1] < 0.0 && speeds[i] > 0.0) {
                const double w = -speeds[i - 1] / (speeds[i] - speeds[i - 1]);
                const double f0 = pdf[i - 1] + w * (pdf[i] - pdf[i - 1]);
                speeds.insert(speeds.begin() + static_cast<std::ptrdiff_t>(i), 0.0);
                pdf.insert(pdf.begin() + static_cast<std::ptrdiff_t>(i), f0);
                break;
            }
        }
        double area = 0.0;
        for (std::size_t i = 1; i < speeds.size(); ++i)
            area += 0.5 * (pdf[i - 1] + pdf[i]) * (speeds[i] - speeds[i - 1]);
        if (!(area > 0.0))
            throw domain_error("tabulated speed law has zero mass");
        for (double& f : pdf)
            f /= area;

        speed_distribution d;
        d.kind_ = kind::tabulated;
        d.xs_ = std::move(speeds);
        d.fs_ = std::move(pdf);
        d.table_ = detail::piecewise_linear_table(d.xs_, d.fs_);
        return d;
    }

    /// Two-sided law built from a one-sided magnitude table (v >= 0), halved and
    /// mirrored onto negative speeds. A table starting above 0 leaves the gap
    /// (-m_0, m_0) empty.
    static speed_distribution symmetric_tabulated(std::span<const double> magnitudes,
                                                  std::span<const double> pdf)
    {
        if (magnitudes.size() != pdf.size() || magnitudes.empty() || magnitudes.front() < 0.0)
            throw domain_error("symmetric tabulated speed law needs non-negative magnitudes");
        std::vector<double> xs;
        std::vector<double> fs;
        for (std::size_t i = magnitudes.size(); i-- > 0;) {
            if (magnitudes[i] == 0.0)
                continue;
            xs.push_back(-magnitudes[i]);
            fs.push_back(0.5 * pdf[i]);
        }
        if (magnitudes.front() == 0.0) {
            xs.push_back(0.0);
            fs.push_back(0.5 * pdf.front());
        }
        for (std::size_t i = 0; i < magnitudes.size(); ++i) {
            if (magnitudes[i] == 0.0)
                continue;
            xs.push_back(magnitudes[i]);
            fs.push_back(0.5 * pdf[i]);
        }
        if (magnitudes.front() == 0.0)
            return tabulated(std::move(xs), std::move(fs));

        // validate the magnitude table on its own, then mirror it
        const auto half = tabulated(std::vector<double>(magnitudes.begin(), magnitudes.end()),
                                    std::vector<double>(pdf.begin(), pdf.end()));
        speed_distribution d;
        d.kind_ = kind::tabulated;
        d.gap_ = magnitudes.front();
        d.xs_ = std::move(xs);
        const std::size_t n = half.fs_.size();
        d.fs_.resize(2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            d.fs_[n - 1 - i] = 0.5 * half.fs_[i];
            d.fs_[n + i] = 0.5 * half.fs_[i];
        }
        d.table_ = half.table_;
        return d;
    }

    kind type() const noexcept { return kind_; }
    bool is_uniform() const noexcept { return kind_ == kind::uniform; }
    bool is_degenerate() const noexcept { return kind_ == kind::uniform && v_a_ == v_b_; }
    double v_a() const noexcept { return v_a_; }
    double v_b() const noexcept { return v_b_; }
    std::span<const double> grid() const noexcept { return xs_; }
    std::span<const double> grid_pdf() const noexcept { return fs_; }

    /// Two-sided density p_V(v). Zero for the degenerate single-speed law.
    double pdf(double v) const
    {
        if (kind_ == kind::uniform) {
            if (is_degenerate())
                return 0.0;
            const double a = std::abs(v);
            return (a >= v_a_ && a <= v_b_) ? 0.5 / (v_b_ - v_a_) : 0.0;
        }
        if (v < xs_.front() || v > xs_.back() || std::abs(v) < gap_)
            return 0.0;
        auto it = std::upper_bound(xs_.begin(), xs_.end(), v);
        if (it == xs_.end())
            return fs_.back();
        const std::size_t i = static_cast<std::size_t>(std::distance(xs_.begin(), it));
        const double w = (v - xs_[i - 1]) / (xs_[i] - xs_[i - 1]);
        return fs_[i - 1] + w * (fs_[i] - fs_[i - 1]);
    }

    /// Density of |V| at v >= 0.
    double one_sided_pdf(double v) const
    {
        if (v < 0.0)
            return 0.0;
        return v == 0.0 ? pdf(0.0) : pdf(v) + pdf(-v);
    }

    /// Sorted signed speeds where pdf() has a kink or jump; quadrature splits here.
    std::vector<double> breakpoints() const
    {
        if (kind_ == kind::uniform)
            return is_degenerate() ? std::vector<double>{-v_a_, v_a_}
                                   : std::vector<double>{-v_b_, -v_a_, v_a_, v_b_};
        return xs_;
    }

    /// Signed support [lo, hi].
    double support_min() const { return kind_ == kind::uniform ? -v_b_ : xs_.front(); }
    double support_max() const { return kind_ == kind::uniform ? v_b_ : xs_.back(); }

    /// True when the density is positive arbitrarily close to v = 0, which makes
    /// the 1/|v| spatial-density integral diverge.
    bool touches_zero() const
    {
        if (kind_ == kind::uniform)
            return false;
        if (xs_.front() > 0.0 || xs_.back() < 0.0)
            return false;
        return pdf(0.0) > 0.0;
    }

    /// Smallest speed magnitude carrying positive density.
    double min_abs_speed() const
    {
        if (kind_ == kind::uniform)
            return v_a_;
        if (gap_ > 0.0)
            return gap_;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < xs_.size(); ++i) {
            if (fs_[i] + fs_[i + 1] <= 0.0)
                continue;
            const double lo = xs_[i];
            const double hi = xs_[i + 1];
            if (lo <= 0.0 && hi >= 0.0)
                return 0.0;
            // positive-mass segment: the end closest to zero may itself have
            // zero density but the magnitude approaches it
            best = std::min(best, std::min(std::abs(lo), std::abs(hi)));
        }
        return best;
    }

    /// Signed speed of a vehicle entering the road, V ~ p_V.
    template <class URBG>
    double sample_signed(URBG& rng) const
    {
        if (kind_ == kind::uniform) {
            std::bernoulli_distribution dir(0.5);
            const double s = dir(rng) ? 1.0 : -1.0;
            return s * sample_uniform_magnitude(rng);
        }
        if (gap_ > 0.0) {
            std::bernoulli_distribution dir(0.5);
            return (dir(rng) ? 1.0 : -1.0) * table_.sample(rng);
        }
        return table_.sample(rng);
    }

    /// Speed magnitude of an entering vehicle, |V|.
    template <class URBG>
    double sample_magnitude(URBG& rng) const
    {
        if (kind_ == kind::uniform)
            return sample_uniform_magnitude(rng);
        return std::abs(table_.sample(rng));
    }

private:
    template <class URBG>
    double sample_uniform_magnitude(URBG& rng) const
    {
        if (is_degenerate())
            return v_a_;
        std::uniform_real_distribution<double> u(v_a_, v_b_);
        return u(rng);
    }

    kind kind_ = kind::uniform;
    double v_a_ = 0.0;
    double v_b_ = 0.0;
    std::vector<double> xs_;
    std::vector<double> fs_;
    double gap_ = 0.0; ///< no mass on (-gap_, gap_); table_ then holds magnitudes
    detail::piecewise_linear_table table_;
};

/// Content popularity law p_Z over the library {1..N_Z}.
class popularity_model {
public:
    enum class kind { zipf, explicit_pmf };

    /// p_Z(z) proportional to z^-alpha, truncated at n_contents. The
    /// normalization is an exact sum, smallest terms first.
    static popularity_model zipf(double alpha, std::size_t n_contents)
    {
        if (n_contents == 0)
            throw domain_error("zipf popularity needs at least one content");
        if (!std::isfinite(alpha) || alpha < 0.0)
            throw domain_error("zipf exponent must be finite and non-negative");
        std::vector<double> w(n_contents);
        for (std::size_t z = 1; z <= n_contents; ++z)
            w[z - 1] = std::pow(static_cast<double>(z), -alpha);
        double norm = 0.0;
        for (std::size_t i = n_contents; i-- > 0;)
            norm += w[i];
        for (double& x : w)
            x /= norm;
        popularity_model p(std::move(w));
        p.kind_ = kind::zipf;
        p.alpha_ = alpha;
        return p;
    }

    /// Explicit PMF; entries must be non-negative and sum to 1 within 1e-9.
    static popularity_model explicit_pmf(std::vector<double> pmf)
    {
        if (pmf.empty())
            throw domain_error("explicit popularity needs at least one content");
        double sum = 0.0;
        for (double x : pmf) {
            if (!(x >= 0.0) || !std::isfinite(x))
                throw domain_error("explicit popularity: negative or non-finite mass");
            sum += x;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw domain_error("explicit popularity must sum to 1 (got " + std::to_string(sum) + ")");
        for (double& x : pmf)
            x /= sum;
        popularity_model p(std::move(pmf));
        p.kind_ = kind::explicit_pmf;
        return p;
    }

    kind type() const noexcept { return kind_; }
    double alpha() const noexcept { return alpha_; }
    std::size_t size() const noexcept { return pmf_.size(); }

    /// p_Z(z) for 1-based content index z.
    double pmf(std::size_t z) const
    {
        if (z < 1 || z > pmf_.size())
            throw domain_error("content index " + std::to_string(z) + " outside library 1.."
                               + std::to_string(pmf_.size()));
        return pmf_[z - 1];
    }

    /// Whole PMF, index 0 holding content 1.
    std::span<const double> pmf() const noexcept { return pmf_; }

    /// Draw a 1-based content index.
    template <class URBG>
    std::size_t sample(URBG& rng) const
    {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double u = unit(rng) * cdf_.back();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        const auto idx = static_cast<std::size_t>(std::distance(cdf_.begin(), it));
        return std::min(idx, pmf_.size() - 1) + 1;
    }

private:
    explicit popularity_model(std::vector<double> pmf)
        : pmf_(std::move(pmf))
        , cdf_(pmf_.size())
    {
        std::partial_sum(pmf_.begin(), pmf_.end(), cdf_.begin());
    }

    kind kind_ = kind::explicit_pmf;
    double alpha_ = 0.0;
    std::vector<double> pmf_;
    std::vector<double> cdf_;
};

/// Traffic and content-request scenario.
struct scenario_params {
    double lambda_t = 1.0 / 3.0; ///< total vehicle arrival rate, both ends [1/s]
    speed_distribution speed = speed_distribution::uniform(6.0, 16.0);
    double lambda_Z = 1.0 / 6.0; ///< content requests per device [1/s]
    popularity_model popularity = popularity_model::zipf(1.1, 10000);
    double tau_c = 20.0;        ///< content timeout [s]
    double tau_s = 600.0;       ///< sharing timeout [s]
    double roi_length = 1800.0; ///< street length [m]
    double lane_gap = 10.0;     ///< distance between the two lane centres [m]

    // Zero rates and tau_c == 0 or tau_c == tau_s are admitted as degenerate limits.
    void validate() const
    {
        if (!(lambda_t >= 0.0) || !std::isfinite(lambda_t))
            throw config_error("scenario.lambda_t must be >= 0");
        if (!(lambda_Z >= 0.0) || !std::isfinite(lambda_Z))
            throw config_error("scenario.lambda_z must be >= 0");
        if (!(tau_c >= 0.0) || !(tau_s >= tau_c) || !std::isfinite(tau_s))
            throw config_error("scenario timeouts must satisfy 0 <= tau_c <= tau_s");
        if (!(roi_length > 0.0) || !std::isfinite(roi_length))
            throw config_error("scenario.roi_length must be > 0");
        if (!(lane_gap >= 0.0) || !std::isfinite(lane_gap))
            throw config_error("scenario.lane_gap must be >= 0");
    }
};

/// Link-budget parameters for per-subcarrier transmit power.
struct radio_params {
    double e_bar = 5.0;                   ///< target normalized rate [bit/s/Hz]
    double w_c_hz = 200e3 / 12.0;         ///< subcarrier spacing [Hz]
    double n0_dbm_hz = -174.0;            ///< thermal noise density [dBm/Hz]
    double noise_figure_db = 10.0;        ///< receiver noise figure [dB]
    double link_margin_db = 15.0;         ///< multiplicative power margin [dB]
    double d_max = 100.0;                 ///< maximum D2D range [m]
    double d_max_i2d = 300.0;             ///< cell radius [m]

    void validate() const
    {
        if (!(e_bar > 0.0) || !std::isfinite(e_bar))
            throw config_error("radio.e_bar must be > 0");
        if (!(w_c_hz > 0.0) || !std::isfinite(w_c_hz))
            throw config_error("radio.w_c_hz must be > 0");
        if (!std::isfinite(n0_dbm_hz) || !std::isfinite(noise_figure_db) || !std::isfinite(link_margin_db))
            throw config_error("radio dB quantities must be finite");
        if (!(d_max > 0.0) || !std::isfinite(d_max))
            throw config_error("radio.d_max must be > 0");
        if (!(d_max_i2d > 0.0) || !std::isfinite(d_max_i2d))
            throw config_error("radio.d_max_i2d must be > 0");
    }
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

/// Noise power on one subcarrier, w_c * F_rc * N_0, in mW.
inline double sigma_c_squared(const radio_params& radio)
{
    return radio.w_c_hz * db_to_linear(radio.n0_dbm_hz + radio.noise_figure_db);
}

} // namespace d2doff
