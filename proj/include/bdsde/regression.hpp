#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>

#include "bdsde/errors.hpp"

namespace bdsde {

/// Degree-2 polynomial expansion of a raw feature vector: intercept, all
/// linears, all pairwise products (squares included). Exact for the linear
/// example's value function and cheap enough to refit at every time step.
class QuadraticBasis {
public:
    explicit QuadraticBasis(std::size_t n_raw) : q_(n_raw) {}

    std::size_t raw_size() const { return q_; }
    std::size_t size() const { return 1 + q_ + q_ * (q_ + 1) / 2; }

    void expand(std::span<const double> raw, double* row) const {
        row[0] = 1.0;
        std::size_t j = 1;
        for (std::size_t i = 0; i < q_; ++i) row[j++] = raw[i];
        for (std::size_t a = 0; a < q_; ++a)
            for (std::size_t b = a; b < q_; ++b) row[j++] = raw[a] * raw[b];
    }

private:
    std::size_t q_;
};

/// Ridge least squares for one time step. The Gram matrix is factorized once
/// and reused for every response column and every Picard sweep.
class StepRegression {
public:
    void factorize(const Eigen::MatrixXd& X, double lambda_eff) {
        Eigen::MatrixXd gram = X.transpose() * X;
        gram.diagonal().array() += lambda_eff;
        ldlt_.compute(gram);
        if (ldlt_.info() != Eigen::Success)
            throw SingularRegression("regression Gram factorization failed");
        ready_ = true;
    }

    bool ready() const { return ready_; }

    /// Fitted values X * argmin_b |X b - R|^2 + lambda |b|^2, column by column.
    void fit(const Eigen::MatrixXd& X, const Eigen::MatrixXd& responses,
             Eigen::MatrixXd& fitted) const {
        Eigen::MatrixXd beta = ldlt_.solve(X.transpose() * responses);
        if (!beta.allFinite())
            throw SingularRegression("regression produced non-finite coefficients");
        fitted.noalias() = X * beta;
    }

private:
    Eigen::LDLT<Eigen::MatrixXd> ldlt_;
    bool ready_ = false;
};

}  // namespace bdsde
