#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace fkq {

/// Uniform grid on [-L, L] with an odd node count so that 0 is a node.
class Grid {
public:
    Grid(double L, std::size_t n);
    /// Grid on [lo, hi] (used after a change of variables).
    static Grid interval(double lo, double hi, std::size_t n);

    double L() const { return 0.5 * (hi_ - lo_); }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double h() const { return h_; }
    std::size_t n() const { return nodes_.size(); }
    double operator[](std::size_t i) const { return nodes_[i]; }
    const std::vector<double>& nodes() const { return nodes_; }

    /// Index of the node closest to x (clamped).
    std::size_t nearest(double x) const;
    bool contains(double x) const { return x >= lo_ && x <= hi_; }

    std::vector<double> sample(const std::function<double(double)>& f) const;

    /// Trapezoid rule.
    double integrate(std::span<const double> f) const;
    double integrate_product(std::span<const double> f, std::span<const double> g) const;
    /// Running trapezoid integral, starting at 0 on the left.
    std::vector<double> cumulative(std::span<const double> f) const;

    /// Fourth-order first derivative; one-sided five-point stencils at the ends.
    std::vector<double> derivative(std::span<const double> f) const;

private:
    Grid(double lo, double hi, std::size_t n, int);
    double lo_, hi_, h_;
    std::vector<double> nodes_;
};

/// Six-point local Lagrange stencil for evaluating grid samples off-node.
struct Stencil {
    static constexpr int width = 6;
    std::size_t first = 0;
    std::array<double, width> w{};

    double apply(std::span<const double> f) const
    {
        double s = 0.0;
        for (int j = 0; j < width; ++j)
            s += w[j] * f[first + j];
        return s;
    }
};

Stencil make_stencil(const Grid& g, double x);

/// Evaluate grid samples at x with the local stencil.
inline double interpolate(const Grid& g, std::span<const double> f, double x)
{
    return make_stencil(g, x).apply(f);
}

} // namespace fkq
