#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "d2doff/errors.hpp"

namespace d2doff {

/// Sample mean with a two-sided Student-t confidence interval.
struct confidence_interval {
    double mean = 0.0;
    double half_width = 0.0;
    std::size_t n = 0;

    double lo() const noexcept { return mean - half_width; }
    double hi() const noexcept { return mean + half_width; }
    bool contains(double x) const noexcept { return x >= lo() && x <= hi(); }
};

inline double sample_mean(std::span<const double> xs)
{
    if (xs.empty())
        throw domain_error("sample_mean of an empty sample");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

/// Unbiased sample standard deviation.
inline double sample_stddev(std::span<const double> xs)
{
    if (xs.size() < 2)
        throw domain_error("sample_stddev needs at least two values");
    const double m = sample_mean(xs);
    double ss = 0.0;
    for (double x : xs)
        ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

inline double student_t_quantile(double p, double dof)
{
    boost::math::students_t dist(dof);
    return boost::math::quantile(dist, p);
}

inline confidence_interval mean_confidence_interval(std::span<const double> xs, double level = 0.95)
{
    if (xs.size() < 2)
        throw domain_error("a confidence interval needs at least two replications");
    confidence_interval ci;
    ci.n = xs.size();
    ci.mean = sample_mean(xs);
    const double t = student_t_quantile(0.5 + 0.5 * level, static_cast<double>(xs.size() - 1));
    ci.half_width = t * sample_stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
    return ci;
}

/// One-sample Kolmogorov-Smirnov distance between `samples` and `cdf`.
/// Sorts a copy of the samples.
template <class Cdf>
double ks_distance(std::vector<double> samples, Cdf&& cdf)
{
    if (samples.empty())
        throw domain_error("ks_distance of an empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::max(f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f));
    }
    return d;
}

} // namespace d2doff
