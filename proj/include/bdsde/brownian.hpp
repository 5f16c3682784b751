#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>

#include "bdsde/core_types.hpp"
#include "bdsde/parallel.hpp"
#include "bdsde/process.hpp"
#include "bdsde/rng.hpp"
#include "bdsde/time_grid.hpp"

namespace bdsde {

/// Per-path increments of the two driving Brownian motions on a grid:
/// forward W (dimension d) and backward-noise B (dimension l), mutually
/// independent. Component streams: dW uses RNG components [0, d), dB uses
/// [d, d + l).
struct BrownianBundle {
    TimeGrid grid;
    Dimensions dims;
    std::size_t n_paths = 0;
    std::uint64_t seed = 0;
    std::uint64_t first_path = 0;  // global index of path 0, for substreams
    ProcessArray dW;               // (n_paths, N, d)
    ProcessArray dB;               // (n_paths, N, l)
};

/// Samples a bundle. Increment (p, i, c) is a pure function of
/// (seed, first_path + p, i, c), so any subset of paths regenerates
/// independently and bit-exactly.
inline BrownianBundle generate_bundle(const TimeGrid& grid, const Dimensions& dims,
                                      std::size_t n_paths, std::uint64_t seed,
                                      std::uint64_t first_path = 0) {
    if (n_paths < 1) throw std::invalid_argument("generate_bundle: n_paths must be >= 1");
    dims.validate();
    BrownianBundle b;
    b.grid = grid;
    b.dims = dims;
    b.n_paths = n_paths;
    b.seed = seed;
    b.first_path = first_path;
    const std::size_t N = grid.steps();
    const auto d = static_cast<std::size_t>(dims.d);
    const auto l = static_cast<std::size_t>(dims.l);
    b.dW = ProcessArray(n_paths, N, d);
    b.dB = ProcessArray(n_paths, N, l);
    std::vector<double> sqrt_dt(N);
    for (std::size_t i = 0; i < N; ++i) sqrt_dt[i] = std::sqrt(grid.dt(i));
    parallel_paths(n_paths, [&](std::size_t p) {
        const std::uint64_t gp = first_path + p;
        for (std::size_t i = 0; i < N; ++i) {
            for (std::size_t a = 0; a < d; ++a)
                b.dW(p, i, a) = sqrt_dt[i] * rng::normal(seed, gp, static_cast<std::uint32_t>(i),
                                                         static_cast<std::uint32_t>(a));
            for (std::size_t c = 0; c < l; ++c)
                b.dB(p, i, c) = sqrt_dt[i] * rng::normal(seed, gp, static_cast<std::uint32_t>(i),
                                                         static_cast<std::uint32_t>(d + c));
        }
    });
    return b;
}

/// W_{t_i} per path: cumulative sums of dW, shape (n_paths, N + 1, d),
/// W_0 = 0.
inline ProcessArray cumulative_forward(const BrownianBundle& b) {
    const std::size_t N = b.grid.steps();
    const auto d = static_cast<std::size_t>(b.dims.d);
    ProcessArray W(b.n_paths, N + 1, d);
    parallel_paths(b.n_paths, [&](std::size_t p) {
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t a = 0; a < d; ++a) W(p, i + 1, a) = W(p, i, a) + b.dW(p, i, a);
    });
    return W;
}

/// B_{t_i} per path, shape (n_paths, N + 1, l), B_0 = 0.
inline ProcessArray cumulative_backward(const BrownianBundle& b) {
    const std::size_t N = b.grid.steps();
    const auto l = static_cast<std::size_t>(b.dims.l);
    ProcessArray B(b.n_paths, N + 1, l);
    parallel_paths(b.n_paths, [&](std::size_t p) {
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t c = 0; c < l; ++c) B(p, i + 1, c) = B(p, i, c) + b.dB(p, i, c);
    });
    return B;
}

/// B_T - B_{t_i}: the remaining backward mass, the canonical
/// future-of-B regression feature. Shape (n_paths, N + 1, l); zero at t_N.
inline ProcessArray backward_tail(const BrownianBundle& b) {
    const std::size_t N = b.grid.steps();
    const auto l = static_cast<std::size_t>(b.dims.l);
    ProcessArray tail(b.n_paths, N + 1, l);
    parallel_paths(b.n_paths, [&](std::size_t p) {
        for (std::size_t i = N; i-- > 0;)
            for (std::size_t c = 0; c < l; ++c) tail(p, i, c) = tail(p, i + 1, c) + b.dB(p, i, c);
    });
    return tail;
}

/// Backward Ito integrals of a deterministic integrand from each grid time to
/// the horizon: I(p, i, c) = sum_{j >= i} h(t_{j+1}) dB_j^c (right-endpoint
/// evaluation). Shape (n_paths, N + 1, l).
inline ProcessArray backward_tail_integral(const BrownianBundle& b,
                                           const std::function<double(double)>& h) {
    const std::size_t N = b.grid.steps();
    const auto l = static_cast<std::size_t>(b.dims.l);
    std::vector<double> hv(N);
    for (std::size_t j = 0; j < N; ++j) hv[j] = h(b.grid.t(j + 1));
    ProcessArray out(b.n_paths, N + 1, l);
    parallel_paths(b.n_paths, [&](std::size_t p) {
        for (std::size_t i = N; i-- > 0;)
            for (std::size_t c = 0; c < l; ++c)
                out(p, i, c) = out(p, i + 1, c) + hv[i] * b.dB(p, i, c);
    });
    return out;
}

/// Coarsens a bundle to every other grid point: coarse increments are sums of
/// adjacent fine increments, i.e. the same Brownian paths observed at half
/// the resolution. Used for refinement-based scheme-error estimates on
/// common noise.
inline BrownianBundle coarsen_bundle(const BrownianBundle& b) {
    const std::size_t N = b.grid.steps();
    if (N < 2) throw std::invalid_argument("coarsen_bundle: need at least two steps");
    BrownianBundle c;
    c.grid = b.grid.coarsened();
    c.dims = b.dims;
    c.n_paths = b.n_paths;
    c.seed = b.seed;
    c.first_path = b.first_path;
    const std::size_t Nc = c.grid.steps();
    const auto d = static_cast<std::size_t>(b.dims.d);
    const auto l = static_cast<std::size_t>(b.dims.l);
    c.dW = ProcessArray(b.n_paths, Nc, d);
    c.dB = ProcessArray(b.n_paths, Nc, l);
    parallel_paths(b.n_paths, [&](std::size_t p) {
        for (std::size_t j = 0; j < Nc; ++j) {
            const std::size_t i0 = 2 * j;
            const std::size_t i1 = std::min(2 * j + 1, N - 1);
            for (std::size_t a = 0; a < d; ++a)
                c.dW(p, j, a) = b.dW(p, i0, a) + (i1 > i0 ? b.dW(p, i1, a) : 0.0);
            for (std::size_t cc = 0; cc < l; ++cc)
                c.dB(p, j, cc) = b.dB(p, i0, cc) + (i1 > i0 ? b.dB(p, i1, cc) : 0.0);
        }
    });
    return c;
}

/// Read-only view of one path's cumulative W and B values; what terminal
/// conditions are evaluated against.
struct PathView {
    const TimeGrid* grid = nullptr;
    const ProcessArray* W = nullptr;  // cumulative forward values
    const ProcessArray* B = nullptr;  // cumulative backward values
    std::size_t path = 0;

    double W_at(std::size_t i, std::size_t a) const { return (*W)(path, i, a); }
    double B_at(std::size_t i, std::size_t c) const { return (*B)(path, i, c); }
    double W_T(std::size_t a) const { return (*W)(path, grid->steps(), a); }
    double B_T(std::size_t c) const { return (*B)(path, grid->steps(), c); }
};

}  // namespace bdsde
