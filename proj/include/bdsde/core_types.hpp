#pragma once

#include <algorithm>
#include <functional>
#include <optional>
#include <stdexcept>

namespace bdsde {

/// Dimension bookkeeping: the state Y lives in R^k, the forward noise W in
/// R^d (so Z is k x d), the backward noise B in R^l (so g is k x l).
struct Dimensions {
    int k = 1;
    int d = 1;
    int l = 1;

    void validate() const {
        if (k < 1 || d < 1 || l < 1)
            throw std::invalid_argument("Dimensions: k, d, l must all be >= 1");
    }
    bool operator==(const Dimensions&) const = default;
};

/// Integrable tail bound declared by the caller: tail_integral(T) must
/// dominate the integral of the weight over [T, infinity) for T >= valid_from.
struct TailEnvelope {
    std::function<double(double)> tail_integral;
    double valid_from = 0.0;
};

/// Time-dependent Lipschitz rates: v(t) bounds f's sensitivity in y
/// (per unit time), u(t) bounds f's sensitivity in z and g's in y (per
/// square-root unit time). Integrability of v and u^2 is what makes the
/// infinite horizon tractable.
struct LipschitzWeights {
    std::function<double(double)> v;
    std::function<double(double)> u;
    std::optional<TailEnvelope> v_tail;
    std::optional<TailEnvelope> u2_tail;
};

/// kappa(t) = max(v(t), u(t)^2), the combined rate that drives the Gronwall
/// argument.
inline double kappa(const LipschitzWeights& w, double t) {
    const double u = w.u(t);
    return std::max(w.v(t), u * u);
}

}  // namespace bdsde
