#include "fkq/semigroup.hpp"

#include "fkq/errors.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace fkq {

KernelEvaluator::KernelEvaluator(std::shared_ptr<const SpectralBasis> basis, double tail_tol)
    : basis_(std::move(basis)), tail_tol_(tail_tol)
{
    if (!basis_ || basis_->K() < 2)
        throw DomainError("kernel evaluator needs a basis with at least two modes");
    if (!(tail_tol > 0.0))
        throw DomainError("tail tolerance must be positive");
}

double KernelEvaluator::tail_bound(double t) const
{
    {
        std::lock_guard lock(cache_mutex_);
        if (auto it = tail_cache_.find(t); it != tail_cache_.end())
            return it->second;
    }
    const auto& b = *basis_;
    const double k1 = static_cast<double>(b.K() - 1);
    const double Lam = b.lambdas.back();
    double tail = std::numeric_limits<double>::infinity();
    if (Lam * t > 0.0) {
        const double A = b.tildeA;
        const double pre = std::sqrt(std::numbers::e / std::numbers::pi);
        auto f = [&](double u) {
            const double s = std::max(Lam * u + A, 0.0);
            return std::exp(-Lam * u * t) * pre * std::sqrt(s) * 3.0 * k1 * u * u;
        };
        const double u0 = std::cbrt((static_cast<double>(b.K()) - 0.5) / k1);
        boost::math::quadrature::exp_sinh<double> integrator;
        tail = integrator.integrate([&](double v) { return f(u0 + v); }, 0.0, std::numeric_limits<double>::infinity());
    }
    std::lock_guard lock(cache_mutex_);
    if (tail_cache_.size() > 4096)
        tail_cache_.clear();
    tail_cache_.emplace(t, tail);
    return tail;
}

std::vector<double> KernelEvaluator::modes_at(std::span<const std::vector<double>> fields, double x) const
{
    const Stencil st = make_stencil(basis_->grid, x);
    std::vector<double> out(fields.size());
    for (std::size_t k = 0; k < fields.size(); ++k)
        out[k] = st.apply(fields[k]);
    return out;
}

double KernelEvaluator::ell_at(double x) const { return interpolate(basis_->grid, basis_->ell, x); }
double KernelEvaluator::psi_at(std::size_t k, double x) const { return interpolate(basis_->grid, basis_->psis[k], x); }
double KernelEvaluator::theta_at(std::size_t k, double x) const
{
    return interpolate(basis_->grid, basis_->thetas[k], x);
}

KernelValue KernelEvaluator::ptilde_eval(double t, double x, double y) const
{
    if (!(t > 0.0))
        throw DomainError("kernels need t > 0");
    const auto& b = *basis_;
    const auto px = modes_at(b.psis, x);
    const auto py = modes_at(b.psis, y);
    double s = 0.0, mag = 0.0;
    for (std::size_t k = 0; k < b.K(); ++k) {
        const double term = std::exp(-b.lambdas[k] * t) * (px[k] * py[k]);
        s += term;
        mag += std::abs(term);
    }
    KernelValue kv;
    kv.tail = tail_bound(t);
    if (kv.tail > tail_tol_) {
        kv.truncation_warning = true;
        kv.warning_bound = std::exp(b.tildeA * t) / std::sqrt(2.0 * std::numbers::pi * t);
    }
    if (s < 0.0) {
        const double allowed = std::max({tail_tol_, kv.tail, 1e-13 * mag});
        if (-s > allowed)
            throw ConsistencyError("truncated kernel is negative beyond the tail estimate");
        s = 0.0;
    }
    kv.value = s;
    return kv;
}

double KernelEvaluator::p(double t, double x, double y) const
{
    return std::exp(ell_at(x) - ell_at(y)) * ptilde(t, x, y);
}

double KernelEvaluator::r(double t, double x, double y) const
{
    return std::exp(ell_at(x) + ell_at(y)) * ptilde(t, x, y);
}

double KernelEvaluator::q(double t, double x, double y) const
{
    const double p0x = psi_at(0, x);
    if (!(p0x >= 1e-300))
        throw DomainError("Psi_0 vanishes at the starting point: outside the support of the Q-process");
    return std::exp(lambda0() * t) * (psi_at(0, y) / p0x) * ptilde(t, x, y);
}

std::vector<double> KernelEvaluator::coefficients(std::span<const double> phi) const
{
    const auto& b = *basis_;
    if (phi.size() != b.n())
        throw DomainError("function is not sampled on the basis grid");
    std::vector<double> w(b.n());
    for (std::size_t i = 0; i < b.n(); ++i)
        w[i] = phi[i] * std::exp(-b.ell[i]);
    std::vector<double> c(b.K());
    for (std::size_t k = 0; k < b.K(); ++k)
        c[k] = b.grid.integrate_product(b.psis[k], w);
    return c;
}

std::vector<double> KernelEvaluator::synthesize(std::span<const double> coeffs, double t) const
{
    const auto& b = *basis_;
    std::vector<double> out(b.n(), 0.0);
    for (std::size_t k = 0; k < b.K(); ++k) {
        const double w = std::exp(-b.lambdas[k] * t) * coeffs[k];
        for (std::size_t i = 0; i < b.n(); ++i)
            out[i] += w * b.thetas[k][i];
    }
    return out;
}

double KernelEvaluator::apply_Pt(std::span<const double> phi, double t, double x) const
{
    if (!(t > 0.0))
        throw DomainError("P_t needs t > 0");
    const auto c = coefficients(phi);
    const auto th = modes_at(basis_->thetas, x);
    double s = 0.0;
    for (std::size_t k = 0; k < c.size(); ++k)
        s += std::exp(-basis_->lambdas[k] * t) * c[k] * th[k];
    return s;
}

std::vector<double> KernelEvaluator::apply_Pt_grid(std::span<const double> phi, double t) const
{
    if (!(t > 0.0))
        throw DomainError("P_t needs t > 0");
    return synthesize(coefficients(phi), t);
}

double KernelEvaluator::achievable_decay() const
{
    const auto& b = *basis_;
    const std::size_t n = b.n();
    const std::size_t band = std::max<std::size_t>(n / 20, 3);
    double best = std::numeric_limits<double>::infinity();
    const double logTol = std::log(tail_tol_);
    for (std::size_t k = 0; k < b.K(); ++k)
        for (std::size_t j = 1; j <= band; ++j)
            for (std::size_t i : {j, n - 1 - j}) {
                const double v = std::abs(b.psis[k][i]) * std::exp(-b.ell[i]);
                const double ax = std::abs(b.grid[i]);
                if (v > 0.0 && ax > 0.0)
                    best = std::min(best, (logTol - std::log(v)) / ax);
            }
    return best;
}

std::vector<double> KernelEvaluator::projection_Pi(std::span<const double> g) const
{
    const auto& b = *basis_;
    const double c = coefficients(g)[0];
    std::vector<double> out(b.n());
    for (std::size_t i = 0; i < b.n(); ++i)
        out[i] = c * b.thetas[0][i];
    return out;
}

double KernelEvaluator::mass(double t, double x) const
{
    const std::vector<double> one(basis_->n(), 1.0);
    return apply_Pt(one, t, x);
}

std::vector<double> KernelEvaluator::mass_grid(double t) const
{
    const std::vector<double> one(basis_->n(), 1.0);
    return apply_Pt_grid(one, t);
}

double KernelEvaluator::log_D(double kappa) const
{
    const auto& b = *basis_;
    const double E = 2.0 * b.tildeE;
    const double t0 = 4.0 * (b.beta + 1.0) / E;
    const double t1 = 4.0 * (kappa + b.beta + 1.0) / E;
    const double T = t0 + t1;
    double sum = 0.0;
    for (std::size_t k = 1; k < b.K(); ++k)
        sum += std::exp(-(b.lambdas[k] - b.lambdas[1]) * T);
    sum += tail_bound(T) * std::exp(b.lambdas[1] * T);
    return std::log(2.0) + b.gamma + log_C1(kappa + b.beta + 1.0, b.tildeA, b.tildeE, b.tilde_x0)
         + log_C1(b.beta + 1.0, b.tildeA, b.tildeE, b.tilde_x0) + b.lambdas[1] * T + std::log(sum);
}

double fit_decay_rate(std::span<const double> times, std::span<const double> values)
{
    const std::size_t m = times.size();
    if (m < 2)
        return std::numeric_limits<double>::quiet_NaN();
    double st = 0, sy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        st += times[i];
        sy += std::log(values[i]);
    }
    st /= m;
    sy /= m;
    double num = 0, den = 0;
    for (std::size_t i = 0; i < m; ++i) {
        num += (times[i] - st) * (std::log(values[i]) - sy);
        den += (times[i] - st) * (times[i] - st);
    }
    return -num / den;
}

GapReport KernelEvaluator::gap_decay(std::span<const double> g, double kappa, const std::vector<double>& times) const
{
    const auto& b = *basis_;
    GapReport rep;
    rep.times = times;
    rep.kappa = kappa;
    rep.expected_rate = gap();
    for (std::size_t i = 0; i < b.n(); ++i)
        rep.A = std::max(rep.A, std::abs(g[i]) * std::exp(-kappa * std::abs(b.grid[i])));
    const double E = 2.0 * b.tildeE;
    rep.burn_in = 3.0 * (4.0 * (b.beta + 1.0) / E + 4.0 * (kappa + b.beta + 1.0) / E);
    rep.log_D = log_D(kappa);

    const auto c = coefficients(g);
    std::vector<double> fitT, fitE;
    for (double t : times) {
        double err = 0.0;
        for (std::size_t i = 0; i < b.n(); ++i) {
            double s = 0.0;
            for (std::size_t k = 1; k < b.K(); ++k)
                s += std::exp(-(b.lambdas[k] - b.lambdas[0]) * t) * c[k] * b.thetas[k][i];
            err = std::max(err, std::abs(s));
        }
        const bool sat = err <= tail_tol_;
        rep.sup_errors.push_back(err);
        rep.saturated.push_back(sat);
        const double lb = std::log(rep.A) + rep.log_D - rep.expected_rate * t;
        rep.log_bound.push_back(lb);
        if (err > 0.0 && std::log(err) > lb)
            rep.bound_holds = false;
        if (!sat) {
            fitT.push_back(t);
            fitE.push_back(err);
        }
    }
    rep.fitted_rate = fit_decay_rate(fitT, fitE);
    for (std::size_t j = 1; j < times.size(); ++j)
        if (times[j - 1] >= rep.burn_in && rep.sup_errors[j] > rep.sup_errors[j - 1] && !rep.saturated[j])
            rep.monotone_after_burn_in = false;
    return rep;
}

HeatResidual KernelEvaluator::heat_residual(double t, double x, double y, double dt, double dh) const
{
    if (!(t - dt > 0.0))
        throw DomainError("heat residual needs t - dt > 0");
    const auto& b = *basis_;
    const Grid& g = b.grid;
    auto P = [&](double tt, double xx, double yy) { return p(tt, xx, yy); };

    const double p0 = P(t, x, y);
    const double pt = (P(t + dt, x, y) - P(t - dt, x, y)) / (2.0 * dt);
    const double px = (P(t, x + dh, y) - P(t, x - dh, y)) / (2.0 * dh);
    const double pxx = (P(t, x + dh, y) - 2.0 * p0 + P(t, x - dh, y)) / (dh * dh);
    const double py = (P(t, x, y + dh) - P(t, x, y - dh)) / (2.0 * dh);
    const double pyy = (P(t, x, y + dh) - 2.0 * p0 + P(t, x, y - dh)) / (dh * dh);

    const double ax = interpolate(g, b.a, x), ay = interpolate(g, b.a, y);
    const double apx = interpolate(g, b.a_prime, x), apy = interpolate(g, b.a_prime, y);
    const double Vx = interpolate(g, b.V, x), Vy = interpolate(g, b.V, y);

    const double Lx = 0.5 * pxx - ax * px + Vx * p0;
    const double Ly = 0.5 * pyy - ay * py + Vy * p0;
    const double Lsx = 0.5 * pxx + ax * px + apx * p0 + Vx * p0;
    const double Lsy = 0.5 * pyy + ay * py + apy * p0 + Vy * p0;
    return {std::abs(pt - Lx), std::abs(pt - Lsy), std::abs(pt - Ly), std::abs(pt - Lsx)};
}

} // namespace fkq
