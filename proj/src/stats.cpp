#include "fkq/stats.hpp"

#include "fkq/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <memory>
#include <mutex>
#include <thread>

namespace fkq {

Estimate mean_stderr(std::span<const double> v)
{
    Estimate e;
    e.samples = v.size();
    if (v.empty())
        return e;
    KahanSum s;
    for (double x : v)
        s.add(x);
    e.mean = s.value() / static_cast<double>(v.size());
    KahanSum q;
    for (double x : v)
        q.add((x - e.mean) * (x - e.mean));
    if (v.size() > 1)
        e.stderr_ = std::sqrt(q.value() / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    return e;
}

Estimate weighted_mean(std::span<const double> w, std::span<const double> f)
{
    Estimate e;
    e.samples = w.size();
    KahanSum sw, swf;
    for (std::size_t i = 0; i < w.size(); ++i) {
        sw.add(w[i]);
        swf.add(w[i] * f[i]);
    }
    if (!(sw.value() > 0.0))
        throw SampleError("all weights vanish");
    e.mean = swf.value() / sw.value();
    KahanSum var;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const double r = w[i] * (f[i] - e.mean);
        var.add(r * r);
    }
    e.stderr_ = std::sqrt(var.value()) / sw.value();
    return e;
}

double effective_sample_size(std::span<const double> w)
{
    KahanSum s, s2;
    for (double x : w) {
        s.add(x);
        s2.add(x * x);
    }
    return s2.value() > 0.0 ? s.value() * s.value() / s2.value() : 0.0;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf)
{
    if (samples.empty())
        throw SampleError("KS statistic of an empty sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double F = cdf(samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
    }
    return d;
}

std::function<double(double)> grid_cdf(const Grid& grid, std::span<const double> density)
{
    auto cum = std::make_shared<std::vector<double>>(grid.cumulative(density));
    const double total = cum->back();
    for (double& v : *cum)
        v /= total;
    const double lo = grid.lo(), h = grid.h();
    return [cum, lo, h](double x) {
        const double s = (x - lo) / h;
        if (s <= 0.0)
            return 0.0;
        const auto i = static_cast<std::size_t>(s);
        if (i + 1 >= cum->size())
            return 1.0;
        const double f = s - static_cast<double>(i);
        return (*cum)[i] * (1.0 - f) + (*cum)[i + 1] * f;
    };
}

unsigned default_threads()
{
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body)
{
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i)
            body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failMutex;
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n)
                    return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(failMutex);
                    if (!failure)
                        failure = std::current_exception();
                    next.store(n);
                }
            }
        });
    for (auto& th : pool)
        th.join();
    if (failure)
        std::rethrow_exception(failure);
}

} // namespace fkq
