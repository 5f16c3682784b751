#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace bdsde {

/// Truncated discretization of [0, infinity): strictly increasing times
/// t_0 = 0 < t_1 < ... < t_N = T. All path-indexed data in the lab lives on
/// one of these.
class TimeGrid {
public:
    TimeGrid() = default;

    explicit TimeGrid(std::vector<double> points) : points_(std::move(points)) {
        if (points_.size() < 2) throw std::invalid_argument("TimeGrid: need at least two points");
        if (points_.front() != 0.0) throw std::invalid_argument("TimeGrid: t_0 must be 0");
        for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
            if (!(points_[i] < points_[i + 1]))
                throw std::invalid_argument("TimeGrid: points must be strictly increasing");
        }
        if (!(points_.back() > 0.0) || !std::isfinite(points_.back()))
            throw std::invalid_argument("TimeGrid: horizon must be positive and finite");
        max_dt_ = 0.0;
        for (std::size_t i = 0; i + 1 < points_.size(); ++i)
            max_dt_ = std::max(max_dt_, points_[i + 1] - points_[i]);
    }

    static TimeGrid uniform(double horizon, std::size_t steps) {
        if (steps < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
        std::vector<double> pts(steps + 1);
        for (std::size_t i = 0; i <= steps; ++i)
            pts[i] = horizon * static_cast<double>(i) / static_cast<double>(steps);
        pts[0] = 0.0;
        pts[steps] = horizon;
        return TimeGrid(std::move(pts));
    }

    /// Step sizes grow geometrically: dt_i = dt_0 * growth^i. growth = 1
    /// reduces to the uniform grid. Clusters resolution near t = 0, where
    /// decaying Lipschitz weights concentrate the dynamics.
    static TimeGrid geometric(double horizon, std::size_t steps, double growth) {
        if (steps < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
        if (!(growth > 0.0)) throw std::invalid_argument("TimeGrid: growth must be positive");
        if (growth == 1.0) return uniform(horizon, steps);
        const double n = static_cast<double>(steps);
        const double dt0 = horizon * (growth - 1.0) / (std::pow(growth, n) - 1.0);
        std::vector<double> pts(steps + 1);
        pts[0] = 0.0;
        double dt = dt0;
        for (std::size_t i = 1; i <= steps; ++i) {
            pts[i] = pts[i - 1] + dt;
            dt *= growth;
        }
        pts[steps] = horizon;
        return TimeGrid(std::move(pts));
    }

    std::size_t steps() const { return points_.size() - 1; }  // N
    std::size_t size() const { return points_.size(); }       // N + 1
    double t(std::size_t i) const { return points_[i]; }
    double dt(std::size_t i) const { return points_[i + 1] - points_[i]; }
    double horizon() const { return points_.back(); }
    double max_dt() const { return max_dt_; }
    std::span<const double> points() const { return points_; }

    /// Grid with every other point (endpoints kept): the natural coarsening
    /// used for refinement-based scheme-error estimates.
    TimeGrid coarsened() const {
        std::vector<double> pts;
        pts.reserve(steps() / 2 + 2);
        for (std::size_t i = 0; i < size(); i += 2) pts.push_back(points_[i]);
        if (pts.back() != points_.back()) pts.push_back(points_.back());
        return TimeGrid(std::move(pts));
    }

    bool operator==(const TimeGrid& o) const { return points_ == o.points_; }

private:
    std::vector<double> points_;
    double max_dt_ = 0.0;
};

}  // namespace bdsde
