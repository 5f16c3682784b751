#pragma once

#include <stdexcept>
#include <vector>

#include "bdsde/brownian.hpp"
#include "bdsde/process.hpp"

namespace bdsde {

/// Forward Ito integral on the grid: per path, sum_i integrand(t_i) dW_i with
/// the integrand evaluated at the LEFT endpoint. The integrand holds k x d
/// matrices; the result is per-path R^k (layout path-major, stride k).
inline std::vector<double> forward_integral(const ProcessArray& integrand,
                                            const BrownianBundle& b) {
    const std::size_t N = b.grid.steps();
    const auto d = static_cast<std::size_t>(b.dims.d);
    if (integrand.n_paths() != b.n_paths || integrand.n_times() != N + 1 ||
        integrand.dim() % d != 0)
        throw std::invalid_argument("forward_integral: shape mismatch");
    const std::size_t k = integrand.dim() / d;
    std::vector<double> out(b.n_paths * k, 0.0);
    parallel_paths(b.n_paths, [&](std::size_t p) {
        for (std::size_t i = 0; i < N; ++i) {
            const auto m = integrand.value(p, i);
            for (std::size_t r = 0; r < k; ++r) {
                double acc = 0.0;
                for (std::size_t a = 0; a < d; ++a) acc += m[r * d + a] * b.dW(p, i, a);
                out[p * k + r] += acc;
            }
        }
    });
    return out;
}

/// Backward Ito integral on the grid: per path, sum_i integrand(t_{i+1}) dB_i
/// with the integrand evaluated at the RIGHT endpoint. This endpoint choice
/// is what distinguishes the backward integral from the forward one at the
/// discrete level. The integrand holds k x l matrices.
inline std::vector<double> backward_integral(const ProcessArray& integrand,
                                             const BrownianBundle& b) {
    const std::size_t N = b.grid.steps();
    const auto l = static_cast<std::size_t>(b.dims.l);
    if (integrand.n_paths() != b.n_paths || integrand.n_times() != N + 1 ||
        integrand.dim() % l != 0)
        throw std::invalid_argument("backward_integral: shape mismatch");
    const std::size_t k = integrand.dim() / l;
    std::vector<double> out(b.n_paths * k, 0.0);
    parallel_paths(b.n_paths, [&](std::size_t p) {
        for (std::size_t i = 0; i < N; ++i) {
            const auto m = integrand.value(p, i + 1);
            for (std::size_t r = 0; r < k; ++r) {
                double acc = 0.0;
                for (std::size_t c = 0; c < l; ++c) acc += m[r * l + c] * b.dB(p, i, c);
                out[p * k + r] += acc;
            }
        }
    });
    return out;
}

}  // namespace bdsde
