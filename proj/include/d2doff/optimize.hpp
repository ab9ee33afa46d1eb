#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "d2doff/errors.hpp"

namespace d2doff {

struct minimum_result {
    double x = 0.0;
    double value = 0.0;
    bool at_boundary = false; ///< minimizer within tolerance of an interval end
    std::size_t evaluations = 0;
};

/// Minimize f on [lo, hi]: a coarse scan of `grid_points` equally spaced points
/// picks the bracket around the best sample, then golden-section search
/// narrows it to `tol`. Unimodality is only assumed inside the bracket.
template <class F>
minimum_result golden_section_minimize(F&& f, double lo, double hi, double tol = 0.1,
                                       std::size_t grid_points = 17)
{
    if (!(hi > lo) || !(tol > 0.0) || grid_points < 3)
        throw domain_error("golden_section_minimize: need lo < hi, tol > 0, >= 3 grid points");

    minimum_result res;
    std::vector<double> xs(grid_points);
    std::vector<double> fs(grid_points);
    const double step = (hi - lo) / static_cast<double>(grid_points - 1);
    for (std::size_t i = 0; i < grid_points; ++i) {
        xs[i] = (i + 1 == grid_points) ? hi : lo + step * static_cast<double>(i);
        fs[i] = f(xs[i]);
        ++res.evaluations;
    }
    const auto best = static_cast<std::size_t>(std::distance(fs.begin(), std::min_element(fs.begin(), fs.end())));
    double a = xs[best == 0 ? 0 : best - 1];
    double b = xs[std::min(best + 1, grid_points - 1)];

    constexpr double inv_phi = 0.6180339887498949; // (sqrt(5) - 1) / 2
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    res.evaluations += 2;
    while (b - a > tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        ++res.evaluations;
    }
    res.x = 0.5 * (a + b);
    res.value = f(res.x);
    ++res.evaluations;
    // the bracket interior never reaches the ends, so compare against the samples there
    if (fs[best] < res.value) {
        res.x = xs[best];
        res.value = fs[best];
    }
    res.at_boundary = (res.x - lo) <= tol || (hi - res.x) <= tol;
    return res;
}

} // namespace d2doff
