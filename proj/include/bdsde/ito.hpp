#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "bdsde/brownian.hpp"
#include "bdsde/process.hpp"

namespace bdsde {

/// The data of the extended Ito formula: alpha_t = alpha_0 + int beta ds
/// + int gamma dB (backward) + int delta dW (forward). alpha0 holds either k
/// values (broadcast over paths) or n_paths * k values.
struct ItoQuadruple {
    std::vector<double> alpha0;
    ProcessArray beta;   // (n_paths, N+1, k)
    ProcessArray gamma;  // (n_paths, N+1, k*l)
    ProcessArray delta;  // (n_paths, N+1, k*d)
};

struct ItoCheckReport {
    double pathwise_residual_rms = 0.0;
    double expectation_residual = 0.0;
};

/// Reconstructs alpha on the grid (left-endpoint ds and dW terms,
/// right-endpoint dB terms) and measures how far |alpha_t|^2 deviates from
/// the squared-norm expansion: pathwise with all stochastic terms kept, and
/// in expectation at the horizon with the two stochastic integrals dropped.
/// The quadratic compensators enter with opposite signs: -|gamma|^2 for the
/// backward integral, +|delta|^2 for the forward one.
inline ItoCheckReport ito_check(const ItoQuadruple& q, const BrownianBundle& b) {
    const std::size_t N = b.grid.steps();
    const std::size_t P = b.n_paths;
    const auto d = static_cast<std::size_t>(b.dims.d);
    const auto l = static_cast<std::size_t>(b.dims.l);
    if (q.beta.dim() == 0) throw std::invalid_argument("ito_check: beta has dimension 0");
    const std::size_t k = q.beta.dim();
    q.beta.require_shape(P, N + 1, k, "ito_check beta");
    q.gamma.require_shape(P, N + 1, k * l, "ito_check gamma");
    q.delta.require_shape(P, N + 1, k * d, "ito_check delta");
    const bool alpha0_per_path = q.alpha0.size() == P * k;
    if (!alpha0_per_path && q.alpha0.size() != k)
        throw std::invalid_argument("ito_check: alpha0 must hold k or n_paths*k values");

    // Per-chunk partial sums, combined in chunk order for reproducibility.
    const std::size_t chunk = 1024;
    const std::size_t n_chunks = (P + chunk - 1) / chunk;
    std::vector<double> sq_sum(n_chunks, 0.0);          // sum of squared residuals
    std::vector<double> aT2(n_chunks, 0.0);             // sum of |alpha_T|^2
    std::vector<double> a02(n_chunks, 0.0);             // sum of |alpha_0|^2
    std::vector<double> drift_term(n_chunks, 0.0);      // sum of 2 int (alpha, beta) ds
    std::vector<double> gamma_term(n_chunks, 0.0);      // sum of int |gamma|^2 ds
    std::vector<double> delta_term(n_chunks, 0.0);      // sum of int |delta|^2 ds

    parallel_chunks(P, chunk, [&](std::size_t ci, std::size_t lo, std::size_t hi) {
        std::vector<double> alpha(k), alpha_next(k);
        for (std::size_t p = lo; p < hi; ++p) {
            const double* a0 = alpha0_per_path ? &q.alpha0[p * k] : q.alpha0.data();
            double norm_a0 = 0.0;
            for (std::size_t r = 0; r < k; ++r) {
                alpha[r] = a0[r];
                norm_a0 += a0[r] * a0[r];
            }
            double acc = 0.0;  // running expansion minus |alpha_0|^2
            double drift_acc = 0.0, gamma_acc = 0.0, delta_acc = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                const double dt = b.grid.dt(i);
                const auto beta_i = q.beta.value(p, i);
                const auto gamma_r = q.gamma.value(p, i + 1);  // right endpoint
                const auto delta_i = q.delta.value(p, i);

                // One reconstruction step.
                for (std::size_t r = 0; r < k; ++r) {
                    double inc = beta_i[r] * dt;
                    for (std::size_t c = 0; c < l; ++c) inc += gamma_r[r * l + c] * b.dB(p, i, c);
                    for (std::size_t a = 0; a < d; ++a) inc += delta_i[r * d + a] * b.dW(p, i, a);
                    alpha_next[r] = alpha[r] + inc;
                }

                double two_ab = 0.0, two_agdB = 0.0, two_addW = 0.0, g2 = 0.0, d2 = 0.0;
                for (std::size_t r = 0; r < k; ++r) {
                    two_ab += alpha[r] * beta_i[r];
                    double gdB = 0.0;
                    for (std::size_t c = 0; c < l; ++c) gdB += gamma_r[r * l + c] * b.dB(p, i, c);
                    two_agdB += alpha_next[r] * gdB;
                    double ddW = 0.0;
                    for (std::size_t a = 0; a < d; ++a) ddW += delta_i[r * d + a] * b.dW(p, i, a);
                    two_addW += alpha[r] * ddW;
                }
                for (std::size_t c = 0; c < k * l; ++c) g2 += gamma_r[c] * gamma_r[c];
                for (std::size_t a = 0; a < k * d; ++a) d2 += delta_i[a] * delta_i[a];

                acc += 2.0 * two_ab * dt + 2.0 * two_agdB + 2.0 * two_addW - g2 * dt + d2 * dt;
                drift_acc += 2.0 * two_ab * dt;
                gamma_acc += g2 * dt;
                delta_acc += d2 * dt;

                double norm_next = 0.0;
                for (std::size_t r = 0; r < k; ++r) norm_next += alpha_next[r] * alpha_next[r];
                const double res = norm_next - (norm_a0 + acc);
                sq_sum[ci] += res * res;
                alpha.swap(alpha_next);
            }
            double norm_T = 0.0;
            for (std::size_t r = 0; r < k; ++r) norm_T += alpha[r] * alpha[r];
            aT2[ci] += norm_T;
            a02[ci] += norm_a0;
            drift_term[ci] += drift_acc;
            gamma_term[ci] += gamma_acc;
            delta_term[ci] += delta_acc;
        }
    });

    double sq = 0.0, eaT = 0.0, ea0 = 0.0, edrift = 0.0, egamma = 0.0, edelta = 0.0;
    for (std::size_t c = 0; c < n_chunks; ++c) {
        sq += sq_sum[c];
        eaT += aT2[c];
        ea0 += a02[c];
        edrift += drift_term[c];
        egamma += gamma_term[c];
        edelta += delta_term[c];
    }
    const double np = static_cast<double>(P);
    ItoCheckReport rep;
    // Residual is zero at t_0 by construction; the RMS runs over all N+1
    // grid times.
    rep.pathwise_residual_rms = std::sqrt(sq / (np * static_cast<double>(N + 1)));
    rep.expectation_residual =
        std::abs(eaT / np - (ea0 / np + edrift / np - egamma / np + edelta / np));
    return rep;
}

}  // namespace bdsde
