#include "fkq/qsd.hpp"

#include "fkq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fkq {

QsdMeasure build_qsd(const SpectralBasis& basis)
{
    const auto& g = basis.grid;
    QsdMeasure nu;
    nu.density.resize(g.n());
    for (std::size_t i = 0; i < g.n(); ++i) {
        if (i > 0 && i + 1 < g.n() && !(basis.psis[0][i] > 0.0))
            throw NumericalError("Psi_0 is not positive in the interior");
        nu.density[i] = std::max(basis.thetas[0][i], 0.0) * std::exp(-2.0 * basis.ell[i]);
    }
    nu.Z = g.integrate(nu.density);
    for (double& v : nu.density)
        v /= nu.Z;
    return nu;
}

bool FixedPointReport::all_pass() const
{
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.pass; });
}

FixedPointReport check_qsd_fixed_point(const KernelEvaluator& ev, const QsdMeasure& nu, double t,
                                       const std::vector<TestFunction>& test_functions, double tolerance)
{
    const auto& g = ev.basis().grid;
    FixedPointReport rep;
    rep.tolerance = tolerance;
    const std::vector<double> one(g.n(), 1.0);
    const double mass = g.integrate_product(ev.apply_Pt_grid(one, t), nu.density);
    const double decay = std::exp(-ev.lambda0() * t);
    for (const auto& tf : test_functions) {
        FixedPointEntry e;
        e.label = tf.label;
        e.t = t;
        for (double v : tf.values)
            e.sup_phi = std::max(e.sup_phi, std::abs(v));
        const double nuPhi = g.integrate_product(tf.values, nu.density);
        e.lhs = g.integrate_product(ev.apply_Pt_grid(tf.values, t), nu.density);
        e.rhs = decay * nuPhi;
        e.ratio_error = std::abs(e.lhs / mass - nuPhi);
        const double scale = std::max(e.sup_phi, 1e-300);
        e.pass = std::abs(e.lhs - e.rhs) <= tolerance * scale && e.ratio_error <= tolerance * scale;
        rep.entries.push_back(e);
    }
    return rep;
}

std::vector<double> conditional_evolution(const KernelEvaluator& ev, std::span<const double> mu0, double t)
{
    if (!(t > 0.0))
        throw DomainError("evolution needs t > 0");
    const auto& b = ev.basis();
    const auto& g = b.grid;
    std::vector<double> w(g.n());
    for (std::size_t i = 0; i < g.n(); ++i)
        w[i] = mu0[i] * std::exp(b.ell[i]);
    std::vector<double> out(g.n(), 0.0);
    for (std::size_t k = 0; k < b.K(); ++k) {
        const double c = std::exp(-b.lambdas[k] * t) * g.integrate_product(b.psis[k], w);
        for (std::size_t i = 0; i < g.n(); ++i)
            out[i] += c * b.psis[k][i];
    }
    for (std::size_t i = 0; i < g.n(); ++i)
        out[i] = std::max(out[i], 0.0) * std::exp(-b.ell[i]);
    const double total = g.integrate(out);
    if (!(total > ev.tail_tol()))
        throw NumericalError("conditional evolution lost all its mass");
    for (double& v : out)
        v /= total;
    return out;
}

double tv_distance(const Grid& grid, std::span<const double> mu, std::span<const double> nu)
{
    std::vector<double> d(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i)
        d[i] = std::abs(mu[i] - nu[i]);
    return 0.5 * grid.integrate(d);
}

std::vector<double> point_mass(const Grid& grid, double x)
{
    const double w = 3.0 * grid.h();
    std::vector<double> out = grid.sample([&](double y) {
        return std::exp(-0.5 * (y - x) * (y - x) / (w * w)) / (w * std::sqrt(2.0 * std::numbers::pi));
    });
    const double total = grid.integrate(out);
    for (double& v : out)
        v /= total;
    return out;
}

} // namespace fkq
