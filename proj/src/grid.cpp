#include "fkq/grid.hpp"

#include "fkq/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fkq {

Grid::Grid(double L, std::size_t n) : Grid(-L, L, n, 0)
{
    if (n % 2 == 0)
        throw DomainError("grid node count must be odd");
}

Grid Grid::interval(double lo, double hi, std::size_t n)
{
    return Grid(lo, hi, n, 0);
}

Grid::Grid(double lo, double hi, std::size_t n, int) : lo_(lo), hi_(hi)
{
    if (!(hi > lo))
        throw DomainError("grid needs hi > lo");
    if (n < 7)
        throw DomainError("grid needs at least 7 nodes");
    h_ = (hi - lo) / static_cast<double>(n - 1);
    nodes_.resize(n);
    // Symmetric construction keeps -x and x exact mirrors on [-L, L].
    for (std::size_t i = 0; i < n; ++i) {
        const double fromLeft = lo + h_ * static_cast<double>(i);
        const double fromRight = hi - h_ * static_cast<double>(n - 1 - i);
        nodes_[i] = (2 * i < n - 1) ? fromLeft : fromRight;
    }
    nodes_.front() = lo;
    nodes_.back() = hi;
    if (lo == -hi && n % 2 == 1)
        nodes_[n / 2] = 0.0;
}

std::size_t Grid::nearest(double x) const
{
    const double r = std::round((x - lo_) / h_);
    if (r <= 0)
        return 0;
    return std::min(static_cast<std::size_t>(r), n() - 1);
}

std::vector<double> Grid::sample(const std::function<double(double)>& f) const
{
    std::vector<double> out(n());
    for (std::size_t i = 0; i < n(); ++i)
        out[i] = f(nodes_[i]);
    return out;
}

double Grid::integrate(std::span<const double> f) const
{
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i)
        s += f[i];
    return s * h_;
}

double Grid::integrate_product(std::span<const double> f, std::span<const double> g) const
{
    double s = 0.5 * (f.front() * g.front() + f.back() * g.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i)
        s += f[i] * g[i];
    return s * h_;
}

std::vector<double> Grid::cumulative(std::span<const double> f) const
{
    std::vector<double> out(f.size(), 0.0);
    for (std::size_t i = 1; i < f.size(); ++i)
        out[i] = out[i - 1] + 0.5 * h_ * (f[i - 1] + f[i]);
    return out;
}

std::vector<double> Grid::derivative(std::span<const double> f) const
{
    const std::size_t m = f.size();
    std::vector<double> d(m);
    const double c = 1.0 / (12.0 * h_);
    for (std::size_t i = 2; i + 2 < m; ++i)
        d[i] = c * (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]);
    d[0] = c * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]);
    d[1] = c * (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]);
    d[m - 1] = -c * (-25.0 * f[m - 1] + 48.0 * f[m - 2] - 36.0 * f[m - 3] + 16.0 * f[m - 4] - 3.0 * f[m - 5]);
    d[m - 2] = -c * (-3.0 * f[m - 1] - 10.0 * f[m - 2] + 18.0 * f[m - 3] - 6.0 * f[m - 4] + f[m - 5]);
    return d;
}

Stencil make_stencil(const Grid& g, double x)
{
    if (!(x >= g.lo() - 1e-12 && x <= g.hi() + 1e-12))
        throw DomainError("evaluation point outside the grid");
    const std::size_t n = g.n();
    const double s = (x - g.lo()) / g.h();
    long cell = static_cast<long>(std::floor(s));
    long first = cell - Stencil::width / 2 + 1;
    first = std::clamp(first, 0L, static_cast<long>(n) - Stencil::width);

    Stencil st;
    st.first = static_cast<std::size_t>(first);
    const double u = s - static_cast<double>(first); // position in node units
    const long exact = std::lround(s);
    if (std::abs(s - static_cast<double>(exact)) < 1e-12) {
        st.w.fill(0.0);
        st.w[static_cast<std::size_t>(std::clamp(exact - first, 0L, 5L))] = 1.0;
        return st;
    }
    for (int j = 0; j < Stencil::width; ++j) {
        double w = 1.0;
        for (int k = 0; k < Stencil::width; ++k)
            if (k != j)
                w *= (u - k) / static_cast<double>(j - k);
        st.w[j] = w;
    }
    return st;
}

} // namespace fkq
