#pragma once

// Adaptive Gauss-Kronrod integration (Boost.Math) plus the semi-infinite
// dB-domain integrals used by the mean-power expressions.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <sstream>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "d2doff/errors.hpp"

namespace d2doff {

struct quadrature_spec {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    double tail_cutoff_ratio = 1e-12; ///< stop a dB tail once its bound falls below this share
    unsigned max_depth = 20;

    void validate() const
    {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0) || !(tail_cutoff_ratio > 0.0))
            throw config_error("quadrature tolerances must be positive");
    }
};

/// Integral of f over [a, b]. Throws numeric_error when the result is not
/// finite or the error estimate is grossly above tolerance.
template <class F>
double integrate(F&& f, double a, double b, const quadrature_spec& spec = {})
{
    if (a == b)
        return 0.0;
    double err = 0.0;
    double l1 = 0.0;
    const double value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        f, a, b, spec.max_depth, spec.rel_tol, &err, &l1);
    const double allowed = std::max(spec.abs_tol, std::max(1e-6, spec.rel_tol * 1e3) * l1);
    if (!std::isfinite(value) || err > allowed) {
        std::ostringstream os;
        os << "quadrature did not converge on [" << a << ", " << b << "]: value=" << value
           << " error=" << err << " L1=" << l1 << " rel_tol=" << spec.rel_tol;
        throw numeric_error(os.str());
    }
    return value;
}

/// Sum of integrals over consecutive pieces [pts[i], pts[i+1]].
template <class F>
double integrate_pieces(F&& f, std::span<const double> pts, const quadrature_spec& spec = {})
{
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        sum += integrate(f, pts[i], pts[i + 1], spec);
    return sum;
}

/// I = integral over [y0, inf) of 10^(-y/10) c(y) dy, returned as I * 10^(y0/10)
/// so the result stays O(1) whatever y0 is. `cofactor_sup(y)` must bound |c|
/// on [y, inf); panels are added until the remaining tail bound drops below
/// tail_cutoff_ratio times the accumulated value.
template <class C, class S>
double integrate_db_tail_scaled(C&& cofactor, S&& cofactor_sup, double y0,
                                const quadrature_spec& spec = {}, double panel_db = 10.0)
{
    constexpr double tail_scale = 10.0 / std::numbers::ln10; // integral of 10^(-x/10) over [0, inf)
    auto integrand = [&](double y) { return std::pow(10.0, -(y - y0) / 10.0) * cofactor(y); };
    double acc = 0.0;
    double lo = y0;
    for (int panel = 0; panel < 1000; ++panel) {
        const double hi = lo + panel_db;
        acc += integrate(integrand, lo, hi, spec);
        const double bound = std::abs(cofactor_sup(hi)) * tail_scale * std::pow(10.0, -(hi - y0) / 10.0);
        if (bound <= spec.tail_cutoff_ratio * std::abs(acc) || bound <= 1e-300)
            return acc;
        lo = hi;
    }
    std::ostringstream os;
    os << "semi-infinite dB integral from " << y0 << " dB did not reach tail cutoff "
       << spec.tail_cutoff_ratio << " (accumulated " << acc << ")";
    throw numeric_error(os.str());
}

} // namespace d2doff
