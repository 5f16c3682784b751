#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bdsde/brownian.hpp"
#include "bdsde/core_types.hpp"
#include "bdsde/quadrature.hpp"
#include "bdsde/rng.hpp"

namespace bdsde {

/// Drift f(t, y, z) -> R^k. z is the k x d matrix flattened row-major.
using DriftFn =
    std::function<void(double t, std::span<const double> y, std::span<const double> z,
                       std::span<double> out)>;

/// Backward-noise loading g(t, y) -> R^{k x l}, flattened row-major. By
/// construction g never sees z.
using BackwardLoadFn =
    std::function<void(double t, std::span<const double> y, std::span<double> out)>;

struct CoefficientSet {
    DriftFn f;
    BackwardLoadFn g;
    LipschitzWeights weights;
};

/// Terminal condition xi evaluated from a path's data up to the truncation
/// horizon.
struct TerminalCondition {
    std::function<void(const PathView&, std::span<double> out)> evaluator;
    std::optional<double> second_moment_hint;
};

/// Everything the solver needs to know about one equation. The
/// backward_features are deterministic integrands h_m; their tail integrals
/// against dB become regression features exposing the future of B.
struct ProblemSpec {
    Dimensions dims;
    CoefficientSet coefficients;
    TerminalCondition terminal;
    std::vector<std::function<double(double)>> backward_features;

    void validate() const {
        dims.validate();
        if (!coefficients.f || !coefficients.g || !coefficients.weights.v ||
            !coefficients.weights.u || !terminal.evaluator)
            throw std::invalid_argument("ProblemSpec: missing callable");
    }
};

struct H3Report {
    double v_integral = 0.0;
    double u2_integral = 0.0;
    bool v_converged = false;
    bool u2_converged = false;
    bool pass = false;
};

namespace detail {

/// Integral of w over [a, infinity), honoring a declared tail envelope when
/// present; otherwise improper quadrature carries the whole burden.
inline QuadResult integrate_weight_tail(const std::function<double(double)>& w,
                                        const std::optional<TailEnvelope>& env, double a,
                                        double tol) {
    if (env && env->tail_integral) {
        const double t0 = std::max(a, env->valid_from);
        QuadResult head{0.0, 0.0, true};
        if (t0 > a) head = integrate(w, a, t0, tol);
        QuadResult r;
        r.value = head.value + env->tail_integral(t0);
        r.error = head.error;
        r.converged = head.converged && std::isfinite(r.value);
        return r;
    }
    return integrate(w, a, std::numeric_limits<double>::infinity(), tol);
}

}  // namespace detail

/// Checks the integrability condition on the Lipschitz weights:
/// both int_0^inf v and int_0^inf u^2 must be finite.
inline H3Report check_h3(const LipschitzWeights& w, double quad_tol) {
    if (!(quad_tol > 0.0)) throw std::invalid_argument("check_h3: quad_tol must be positive");
    H3Report rep;
    const auto u2 = [&w](double t) {
        const double u = w.u(t);
        return u * u;
    };
    const QuadResult rv = detail::integrate_weight_tail(w.v, w.v_tail, 0.0, quad_tol);
    const QuadResult ru = detail::integrate_weight_tail(u2, w.u2_tail, 0.0, quad_tol);
    rep.v_integral = rv.value;
    rep.u2_integral = ru.value;
    rep.v_converged = rv.converged;
    rep.u2_converged = ru.converged;
    rep.pass = rv.converged && ru.converged && std::isfinite(rv.value) && std::isfinite(ru.value);
    return rep;
}

struct H2Report {
    double max_violation = 0.0;
    bool pass = false;
};

/// Statistical certificate for the Lipschitz condition: samples argument
/// pairs uniformly in [-box, box] at random times in [0, t_span] and measures
/// the worst excess of |f(t,y1,z1) - f(t,y2,z2)| over v|dy| + u|dz| (and of
/// |g(t,y1) - g(t,y2)| over u|dy|). Deterministic given the seed.
inline H2Report check_h2_sampled(const CoefficientSet& coeffs, const Dimensions& dims,
                                 std::size_t n_samples, double box, std::uint64_t seed,
                                 double t_span = 50.0) {
    if (n_samples < 1) throw std::invalid_argument("check_h2_sampled: n_samples must be >= 1");
    if (!(box > 0.0)) throw std::invalid_argument("check_h2_sampled: box must be positive");
    dims.validate();
    const auto k = static_cast<std::size_t>(dims.k);
    const auto kd = static_cast<std::size_t>(dims.k) * static_cast<std::size_t>(dims.d);
    const auto kl = static_cast<std::size_t>(dims.k) * static_cast<std::size_t>(dims.l);

    std::vector<double> y1(k), y2(k), z1(kd), z2(kd);
    std::vector<double> f1(k), f2(k), g1(kl), g2(kl);
    double worst = 0.0;
    for (std::size_t s = 0; s < n_samples; ++s) {
        std::uint32_t c = 0;
        const auto draw = [&]() { return rng::uniform01(seed, s, 0, c++); };
        const double t = t_span * draw();
        for (auto& x : y1) x = box * (2.0 * draw() - 1.0);
        for (auto& x : y2) x = box * (2.0 * draw() - 1.0);
        for (auto& x : z1) x = box * (2.0 * draw() - 1.0);
        for (auto& x : z2) x = box * (2.0 * draw() - 1.0);

        coeffs.f(t, y1, z1, f1);
        coeffs.f(t, y2, z2, f2);
        coeffs.g(t, y1, g1);
        coeffs.g(t, y2, g2);

        double dy = 0.0, dz = 0.0, df = 0.0, dg = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            dy += (y1[i] - y2[i]) * (y1[i] - y2[i]);
            df += (f1[i] - f2[i]) * (f1[i] - f2[i]);
        }
        for (std::size_t i = 0; i < kd; ++i) dz += (z1[i] - z2[i]) * (z1[i] - z2[i]);
        for (std::size_t i = 0; i < kl; ++i) dg += (g1[i] - g2[i]) * (g1[i] - g2[i]);
        dy = std::sqrt(dy);
        dz = std::sqrt(dz);
        const double vt = coeffs.weights.v(t);
        const double ut = coeffs.weights.u(t);
        worst = std::max(worst, std::sqrt(df) - (vt * dy + ut * dz));
        worst = std::max(worst, std::sqrt(dg) - ut * dy);
    }
    H2Report rep;
    rep.max_violation = std::max(0.0, worst);
    rep.pass = worst <= 1e-10 * std::max(1.0, box);
    return rep;
}

}  // namespace bdsde
