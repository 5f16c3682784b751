#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bdsde/brownian.hpp"
#include "bdsde/core.hpp"
#include "bdsde/time_grid.hpp"

namespace bdsde {

/// The built-in linear test equation (k = d = l = 1):
///   y_t = xi + int_t^T (y+z) h ds + int_t^T y h dB - int_t^T z dW,
/// with rate h(s) = 1/(1+s^2). Its weights have arctan-family tails, which
/// the envelopes below encode exactly.
inline double example7_rate(double s) { return 1.0 / (1.0 + s * s); }

/// int_T^inf 1/(1+s^2) ds
inline double example7_v_tail(double T) { return std::atan(1.0) * 2.0 - std::atan(T); }

/// int_T^inf 1/(1+s^2)^2 ds
inline double example7_u2_tail(double T) {
    return std::atan(1.0) - 0.5 * std::atan(T) - 0.5 * T / (1.0 + T * T);
}

struct LinearExampleSpec {
    enum class XiKind { constant, exp_capped_wt };  // xi = c, or xi = c*exp(min(W_T, cap))
    XiKind xi_kind = XiKind::constant;
    double c = 1.0;
    double cap = 1.0;
    TimeGrid grid;
};

/// ProblemSpec for the linear example; the rate itself is registered as the
/// backward feature so the regression basis can see int_t^T h dB.
inline ProblemSpec make_example7_problem(LinearExampleSpec::XiKind xi_kind, double c = 1.0,
                                         double cap = 1.0) {
    ProblemSpec prob;
    prob.dims = Dimensions{1, 1, 1};
    prob.coefficients.f = [](double t, std::span<const double> y, std::span<const double> z,
                             std::span<double> out) {
        out[0] = (y[0] + z[0]) * example7_rate(t);
    };
    prob.coefficients.g = [](double t, std::span<const double> y, std::span<double> out) {
        out[0] = y[0] * example7_rate(t);
    };
    prob.coefficients.weights.v = [](double t) { return example7_rate(t); };
    prob.coefficients.weights.u = [](double t) { return example7_rate(t); };
    prob.coefficients.weights.v_tail = TailEnvelope{&example7_v_tail, 0.0};
    prob.coefficients.weights.u2_tail = TailEnvelope{&example7_u2_tail, 0.0};
    if (xi_kind == LinearExampleSpec::XiKind::constant) {
        prob.terminal.evaluator = [c](const PathView&, std::span<double> out) { out[0] = c; };
        prob.terminal.second_moment_hint = c * c;
    } else {
        prob.terminal.evaluator = [c, cap](const PathView& path, std::span<double> out) {
            out[0] = c * std::exp(std::min(path.W_T(0), cap));
        };
        prob.terminal.second_moment_hint = c * c * std::exp(2.0 * cap);
    }
    prob.backward_features.push_back(&example7_rate);
    return prob;
}

namespace detail {

/// Nested Monte Carlo core shared by both representations. Conditioning on
/// F_t fixes W up to t and B beyond t; the inner loop resimulates only the
/// future of W (the xi kinds here do not look at the past of B). Returns
/// exp(int_t^T h dB) * mean_m xi_m exp(int_t^T h dW_m) per outer path.
inline std::vector<double> linear_example_nested(const LinearExampleSpec& spec,
                                                 const BrownianBundle& bundle,
                                                 std::size_t time_index, std::size_t inner_paths,
                                                 std::uint64_t inner_seed) {
    if (bundle.dims.k != 1 || bundle.dims.d != 1 || bundle.dims.l != 1)
        throw std::invalid_argument("linear example oracle: k = d = l = 1 required");
    const TimeGrid& grid = bundle.grid;
    const std::size_t N = grid.steps();
    if (time_index > N) throw std::invalid_argument("linear example oracle: t not on grid");
    if (inner_paths < 1) throw std::invalid_argument("linear example oracle: inner_paths >= 1");

    const ProcessArray W = cumulative_forward(bundle);
    const ProcessArray IB = backward_tail_integral(bundle, &example7_rate);

    std::vector<double> sqrt_dt(N), h_left(N);
    for (std::size_t j = 0; j < N; ++j) {
        sqrt_dt[j] = std::sqrt(grid.dt(j));
        h_left[j] = example7_rate(grid.t(j));
    }

    std::vector<double> out(bundle.n_paths, 0.0);
    parallel_paths(bundle.n_paths, [&](std::size_t p) {
        const std::uint64_t gp = bundle.first_path + p;
        const double w_t = W(p, time_index, 0);
        double acc = 0.0;
        for (std::size_t m = 0; m < inner_paths; ++m) {
            const std::uint64_t child = rng::derive_seed(inner_seed, m);
            double iw = 0.0, w_end = w_t;
            for (std::size_t j = time_index; j < N; ++j) {
                const double dw =
                    sqrt_dt[j] * rng::normal(child, gp, static_cast<std::uint32_t>(j), 0);
                iw += h_left[j] * dw;
                w_end += dw;
            }
            const double xi = spec.xi_kind == LinearExampleSpec::XiKind::constant
                                  ? spec.c
                                  : spec.c * std::exp(std::min(w_end, spec.cap));
            acc += xi * std::exp(iw);
        }
        out[p] = std::exp(IB(p, time_index, 0)) * acc / static_cast<double>(inner_paths);
    });
    return out;
}

}  // namespace detail

/// The conditional-expectation formula exactly as printed for the linear
/// example: E[ xi exp{int_t^T h dB + int_t^T h dW} | F_t ], truncated at the
/// horizon and evaluated by nested Monte Carlo. Kept verbatim as a
/// diagnostic; it omits deterministic factors (see derived_linear_solution).
inline std::vector<double> paper_explicit_form(const LinearExampleSpec& spec,
                                               const BrownianBundle& bundle,
                                               std::size_t time_index, std::size_t inner_paths,
                                               std::uint64_t inner_seed) {
    return detail::linear_example_nested(spec, bundle, time_index, inner_paths, inner_seed);
}

/// Deterministic factor that the duality argument attaches to the printed
/// formula: exp(int_t^T (h - h^2) ds). It aggregates the drift contribution
/// exp(int h ds) and one -1/2 int h^2 ds Ito correction for each of the dW
/// and dB exponentials (the backward correction acquires the same sign as
/// the forward one once the exponential is anchored at the horizon).
inline double derived_linear_factor(double t, double T) {
    const double int_h = std::atan(T) - std::atan(t);
    const double int_h2 =
        0.5 * (std::atan(T) + T / (1.0 + T * T)) - 0.5 * (std::atan(t) + t / (1.0 + t * t));
    return std::exp(int_h - int_h2);
}

/// The duality representation of the linear example derived from the mixed
/// forward/backward calculus:
///   y_t = exp{int_t^T (h - h^2) ds} E[ xi exp{int_t^T h dB + int_t^T h dW} | F_t ].
/// For xi = 1 this reduces to y_t = exp{int_t^T (h - h^2/2) ds + int_t^T h dB}
/// with z = 0, giving E[y_t] = exp(atan T - atan t).
inline std::vector<double> derived_linear_solution(const LinearExampleSpec& spec,
                                                   const BrownianBundle& bundle,
                                                   std::size_t time_index,
                                                   std::size_t inner_paths,
                                                   std::uint64_t inner_seed) {
    std::vector<double> vals =
        detail::linear_example_nested(spec, bundle, time_index, inner_paths, inner_seed);
    const double factor =
        derived_linear_factor(bundle.grid.t(time_index), bundle.grid.horizon());
    for (double& v : vals) v *= factor;
    return vals;
}

}  // namespace bdsde
