#pragma once

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>

#include "bdsde/errors.hpp"

namespace bdsde {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;  // absolute error estimate
    bool converged = false;
};

/// Adaptive Gauss–Kronrod (15-point) on [a, b]; b may be +infinity, in which
/// case the integrand must decay for the result to converge. `tol` is a
/// relative tolerance target.
template <class F>
QuadResult integrate(F&& f, double a, double b, double tol, unsigned max_depth = 15) {
    using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
    QuadResult r;
    double l1 = 0.0;
    try {
        r.value = GK::integrate(f, a, b, max_depth, tol, &r.error, &l1);
    } catch (const std::exception&) {
        r.value = std::numeric_limits<double>::quiet_NaN();
        r.error = std::numeric_limits<double>::infinity();
        r.converged = false;
        return r;
    }
    const double scale = std::max({1.0, std::abs(r.value), l1});
    r.converged = std::isfinite(r.value) && std::isfinite(l1) && r.error <= 10.0 * tol * scale &&
                  l1 < 1e100;
    return r;
}

/// As integrate(), but throws NonConvergent instead of reporting failure.
template <class F>
double integrate_or_throw(F&& f, double a, double b, double tol, const char* what,
                          unsigned max_depth = 15) {
    QuadResult r = integrate(std::forward<F>(f), a, b, tol, max_depth);
    if (!r.converged) throw NonConvergent(std::string(what) + ": quadrature did not converge");
    return r.value;
}

}  // namespace bdsde
