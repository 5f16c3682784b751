#pragma once

#include <cmath>
#include <string>

#include "bdsde/core.hpp"

namespace bdsde {

/// Smallest horizon T in the geometric candidate set {2^j : j = 0..40} whose
/// weight tails fit the budget: int_T^inf v + int_T^inf u^2 <= tail_budget.
/// Integrability of the weights is exactly what makes such a T exist.
inline double choose_truncation(const LipschitzWeights& w, double tail_budget) {
    if (!(tail_budget > 0.0))
        throw std::invalid_argument("choose_truncation: tail_budget must be positive");
    const auto u2 = [&w](double t) {
        const double u = w.u(t);
        return u * u;
    };
    const double tol = std::min(1e-9, tail_budget * 1e-4);
    for (int j = 0; j <= 40; ++j) {
        const double T = std::ldexp(1.0, j);  // 2^j
        const QuadResult tv = detail::integrate_weight_tail(w.v, w.v_tail, T, tol);
        const QuadResult tu = detail::integrate_weight_tail(u2, w.u2_tail, T, tol);
        if (!tv.converged || !tu.converged)
            throw NonConvergent("choose_truncation: weight tail integral did not converge");
        if (tv.value + tu.value <= tail_budget) return T;
    }
    throw NonConvergent("choose_truncation: no candidate up to 2^40 meets tail_budget " +
                        std::to_string(tail_budget));
}

}  // namespace bdsde
