#pragma once

#include "fkq/grid.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fkq {

class KahanSum {
public:
    void add(double v)
    {
        const double y = v - c_;
        const double t = s_ + y;
        c_ = (t - s_) - y;
        s_ = t;
    }
    double value() const { return s_; }

private:
    double s_ = 0.0, c_ = 0.0;
};

struct Estimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t samples = 0;
};

/// Mean and standard error of a sample, summed in index order.
Estimate mean_stderr(std::span<const double> v);

/// Self-normalized ratio sum w f / sum w with a delta-method standard error.
Estimate weighted_mean(std::span<const double> w, std::span<const double> f);

/// (sum w)^2 / sum w^2.
double effective_sample_size(std::span<const double> w);

/// sup |F_n - F| for a continuous target CDF.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

/// CDF of a grid density by trapezoid accumulation, linearly interpolated.
std::function<double(double)> grid_cdf(const Grid& grid, std::span<const double> density);

/// Run body(i) for i in [0, n) on up to `threads` workers. Results must be written
/// to per-index slots so that aggregation order never depends on scheduling.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

unsigned default_threads();

} // namespace fkq
