#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>

#include "bdsde/core_types.hpp"
#include "bdsde/quadrature.hpp"

namespace bdsde {

/// Data of the deterministic Gronwall-type bound: if
/// m(t) <= A + M int_0^inf m(s) r(s) ds for all t, then
/// m(t) <= A exp(M int_t^inf r(s) ds).
struct GronwallProblem {
    double A = 0.0;  // >= 0
    double M = 1.0;  // > 0
    std::function<double(double)> r;
    std::function<double(double)> m;
    double t_eval = 1.0;
    std::optional<TailEnvelope> r_tail;
    double quad_tol = 1e-9;

    void validate() const {
        if (!(A >= 0.0)) throw std::invalid_argument("GronwallProblem: A must be >= 0");
        if (!(M > 0.0)) throw std::invalid_argument("GronwallProblem: M must be > 0");
        if (!r) throw std::invalid_argument("GronwallProblem: r is required");
    }
};

namespace detail {

inline double tail_integral_of_r(const GronwallProblem& p, double t) {
    if (p.r_tail && p.r_tail->tail_integral) {
        const double t0 = std::max(t, p.r_tail->valid_from);
        double head = 0.0;
        if (t0 > t) head = integrate_or_throw(p.r, t, t0, p.quad_tol, "gronwall r");
        return head + p.r_tail->tail_integral(t0);
    }
    return integrate_or_throw(p.r, t, std::numeric_limits<double>::infinity(), p.quad_tol,
                              "gronwall r");
}

}  // namespace detail

/// A * exp(M * int_t^inf r(s) ds). Throws NonConvergent when int r diverges.
inline double gronwall_bound(const GronwallProblem& p, double t) {
    p.validate();
    if (!(t >= 0.0)) throw std::invalid_argument("gronwall_bound: t must be >= 0");
    if (p.A == 0.0) {
        // Still insist on an integrable r; the zero bound is only the
        // lemma's conclusion under its hypotheses.
        detail::tail_integral_of_r(p, t);
        return 0.0;
    }
    return p.A * std::exp(p.M * detail::tail_integral_of_r(p, t));
}

struct GronwallVerifyReport {
    bool hypothesis_holds = false;   // m(t) <= A + M int_0^inf m r ds, as printed
    bool conclusion_holds = false;   // m(t) <= A exp(M int_t^inf r)
    // Diagnostic variant with the hypothesis integral taken over [t, inf)
    // instead of [0, inf); reported, not part of the contract.
    bool hypothesis_tail_variant_holds = false;
    double hypothesis_rhs = 0.0;
    double max_conclusion_excess = 0.0;  // max over grid of m(t) - allowed bound
};

/// Checks hypothesis and conclusion on a grid of times. Numeric slack is
/// asymmetric on purpose: the hypothesis is accepted up to quadrature error
/// while the conclusion is allowed tol relative plus the hypothesis slack
/// amplified by exp(M int r); with exact arithmetic the lemma guarantees
/// hypothesis => conclusion, and the slack keeps that implication from being
/// broken by roundoff in borderline (saturating) instances.
inline GronwallVerifyReport gronwall_verify(const GronwallProblem& p,
                                            std::span<const double> grid, double tol = 1e-7) {
    p.validate();
    if (!p.m) throw std::invalid_argument("gronwall_verify: m is required");
    GronwallVerifyReport rep;

    const auto mr = [&p](double s) { return p.m(s) * p.r(s); };
    const QuadResult hyp_int =
        integrate(mr, 0.0, std::numeric_limits<double>::infinity(), p.quad_tol);
    if (!hyp_int.converged) throw NonConvergent("gronwall_verify: int m r did not converge");
    rep.hypothesis_rhs = p.A + p.M * hyp_int.value;
    const double hyp_slack =
        p.M * hyp_int.error + 1e-12 * std::max(1.0, std::abs(rep.hypothesis_rhs));

    const double total_r = detail::tail_integral_of_r(p, 0.0);
    const double amplification = std::exp(p.M * total_r);

    rep.hypothesis_holds = true;
    rep.conclusion_holds = true;
    rep.hypothesis_tail_variant_holds = true;
    for (double t : grid) {
        const double mt = p.m(t);
        if (mt > rep.hypothesis_rhs + hyp_slack) rep.hypothesis_holds = false;

        const QuadResult tail_mr =
            integrate(mr, t, std::numeric_limits<double>::infinity(), p.quad_tol);
        if (tail_mr.converged && mt > p.A + p.M * tail_mr.value + hyp_slack)
            rep.hypothesis_tail_variant_holds = false;

        const double bound = gronwall_bound(p, t);
        const double allowed = bound * (1.0 + tol) + hyp_slack * amplification +
                               1e-12 * std::max(1.0, bound);
        rep.max_conclusion_excess = std::max(rep.max_conclusion_excess, mt - allowed);
        if (mt > allowed) rep.conclusion_holds = false;
    }
    return rep;
}

}  // namespace bdsde
