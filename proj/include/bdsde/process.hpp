#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace bdsde {

/// Grid-sampled per-path process. Each (path, time) slot holds a flattened
/// value of `dim` doubles (a vector in R^k, or a k x d matrix stored
/// row-major). Layout is path-major.
class ProcessArray {
public:
    ProcessArray() = default;

    ProcessArray(std::size_t n_paths, std::size_t n_times, std::size_t dim, double fill = 0.0)
        : n_paths_(n_paths), n_times_(n_times), dim_(dim), data_(n_paths * n_times * dim, fill) {}

    static ProcessArray constant(std::size_t n_paths, std::size_t n_times,
                                 std::span<const double> value) {
        ProcessArray a(n_paths, n_times, value.size());
        for (std::size_t p = 0; p < n_paths; ++p)
            for (std::size_t t = 0; t < n_times; ++t)
                for (std::size_t c = 0; c < value.size(); ++c) a(p, t, c) = value[c];
        return a;
    }

    std::size_t n_paths() const { return n_paths_; }
    std::size_t n_times() const { return n_times_; }
    std::size_t dim() const { return dim_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t p, std::size_t t, std::size_t c) {
        return data_[(p * n_times_ + t) * dim_ + c];
    }
    double operator()(std::size_t p, std::size_t t, std::size_t c) const {
        return data_[(p * n_times_ + t) * dim_ + c];
    }

    std::span<double> value(std::size_t p, std::size_t t) {
        return {data_.data() + (p * n_times_ + t) * dim_, dim_};
    }
    std::span<const double> value(std::size_t p, std::size_t t) const {
        return {data_.data() + (p * n_times_ + t) * dim_, dim_};
    }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    void require_shape(std::size_t n_paths, std::size_t n_times, std::size_t dim,
                       const char* what) const {
        if (n_paths_ != n_paths || n_times_ != n_times || dim_ != dim)
            throw std::invalid_argument(std::string(what) + ": shape mismatch");
    }

private:
    std::size_t n_paths_ = 0, n_times_ = 0, dim_ = 0;
    std::vector<double> data_;
};

}  // namespace bdsde
