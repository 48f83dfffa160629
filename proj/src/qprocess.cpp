#include "fkq/qprocess.hpp"

#include "fkq/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fkq {

namespace {

std::vector<double> clamp_all(std::vector<double> v, double clip)
{
    for (double& d : v)
        d = std::isfinite(d) ? std::clamp(d, -clip, clip) : (d > 0 ? clip : -clip);
    return v;
}

} // namespace

QProcessModel::QProcessModel(std::shared_ptr<const SpectralBasis> basis, double sde_clip)
    : basis_(std::move(basis)), clip_(sde_clip)
{
    const auto& b = *basis_;
    drift_.resize(b.n());
    for (std::size_t i = 0; i < b.n(); ++i) {
        const double p = b.psis[0][i];
        if (i > 0 && i + 1 < b.n() && !(p > 0.0))
            throw NumericalError("Psi_0 not positive in the interior; Q-drift undefined");
        drift_[i] = p > 0.0 ? b.dpsis[0][i] / p : (i == 0 ? clip_ : -clip_);
    }
    drift_ = clamp_all(std::move(drift_), clip_);
    wall_ = std::min(-b.grid.lo(), b.grid.hi()) - 5.0 * b.grid.h();
}

QProcessModel::QProcessModel(std::shared_ptr<const SpectralBasis> basis, const std::function<double(double)>& drift,
                             double sde_clip)
    : basis_(std::move(basis)), clip_(sde_clip)
{
    drift_ = clamp_all(basis_->grid.sample(drift), clip_);
    wall_ = std::min(-basis_->grid.lo(), basis_->grid.hi()) - 5.0 * basis_->grid.h();
}

double QProcessModel::drift(double x) const
{
    const Grid& g = basis_->grid;
    const double s = (x - g.lo()) / g.h();
    auto i = static_cast<long>(std::floor(s)) - 1;
    i = std::clamp(i, 0L, static_cast<long>(g.n()) - 4);
    const double u = s - static_cast<double>(i);
    // Four-point cubic Lagrange on nodes i..i+3 (u in node units from node i).
    const double w0 = -(u - 1) * (u - 2) * (u - 3) / 6.0;
    const double w1 = u * (u - 2) * (u - 3) / 2.0;
    const double w2 = -u * (u - 1) * (u - 3) / 2.0;
    const double w3 = u * (u - 1) * (u - 2) / 6.0;
    const auto k = static_cast<std::size_t>(i);
    const double d = w0 * drift_[k] + w1 * drift_[k + 1] + w2 * drift_[k + 2] + w3 * drift_[k + 3];
    return std::clamp(d, -clip_, clip_);
}

QPath simulate_q(const QProcessModel& model, double x0, double T, double dt, Rng& rng, double sample_every)
{
    if (!(std::abs(x0) < model.wall()))
        throw DomainError("Q-process must start inside the reflecting walls");
    const auto steps = static_cast<std::int64_t>(std::llround(T / dt));
    const auto every = std::max<std::int64_t>(1, std::llround(sample_every / dt));
    const double sq = std::sqrt(dt);
    const double wall = model.wall();
    QPath path;
    path.samples.reserve(static_cast<std::size_t>(steps / every + 1));
    path.samples.push_back(x0);
    double x = x0;
    for (std::int64_t j = 1; j <= steps; ++j) {
        x += model.drift(x) * dt + sq * rng.normal();
        if (x > wall) {
            x = 2.0 * wall - x;
            ++path.boundary_events;
        } else if (x < -wall) {
            x = -2.0 * wall - x;
            ++path.boundary_events;
        }
        if (j % every == 0)
            path.samples.push_back(x);
    }
    return path;
}

QLimitReport check_q_limit(const KernelEvaluator& ev, double x, double s, const std::vector<double>& t_values,
                           std::span<const double> phi)
{
    const auto& b = ev.basis();
    const Grid& g = b.grid;
    for (double t : t_values)
        if (!(t > s))
            throw DomainError("every t must exceed s");
    QLimitReport rep;
    rep.t_values = t_values;
    rep.expected_rate = ev.gap();

    std::vector<double> ps(g.n()), qs(g.n());
    for (std::size_t i = 0; i < g.n(); ++i) {
        ps[i] = ev.p(s, x, g[i]);
        qs[i] = ev.q(s, x, g[i]);
    }
    rep.target = g.integrate_product(qs, phi);

    std::vector<double> num(g.n());
    for (double t : t_values) {
        const auto m = ev.mass_grid(t - s);
        for (std::size_t i = 0; i < g.n(); ++i)
            num[i] = ps[i] * m[i];
        const double ratio = g.integrate_product(num, phi) / g.integrate(num);
        rep.ratios.push_back(ratio);
        rep.errors.push_back(std::abs(ratio - rep.target));
    }
    rep.fitted_rate = fit_decay_rate(rep.t_values, rep.errors);
    return rep;
}

OccupationReport invariant_occupation_check(const QProcessModel& model, const OccupationConfig& cfg)
{
    if (cfg.T - cfg.burn_in < 100.0)
        throw DomainError("need at least 100 time units after burn-in");
    const auto& b = model.basis();
    std::vector<QPath> paths(cfg.replicas);
    parallel_for(cfg.replicas, cfg.threads == 0 ? default_threads() : cfg.threads, [&](std::size_t r) {
        Rng rng(cfg.seed, r);
        paths[r] = simulate_q(model, cfg.x0, cfg.T, cfg.dt, rng, cfg.sample_every);
    });
    OccupationReport rep;
    const auto skip = static_cast<std::size_t>(std::llround(cfg.burn_in / cfg.sample_every));
    for (const auto& p : paths) {
        rep.boundary_events += p.boundary_events;
        for (std::size_t i = skip + 1; i < p.samples.size(); ++i)
            rep.pooled.push_back(p.samples[i]);
    }
    rep.samples = rep.pooled.size();

    std::vector<double> sq(b.n()), lin(b.n());
    for (std::size_t i = 0; i < b.n(); ++i) {
        sq[i] = b.psis[0][i] * b.psis[0][i];
        lin[i] = std::max(b.psis[0][i], 0.0);
    }
    rep.ks = ks_statistic(rep.pooled, grid_cdf(b.grid, sq));
    rep.ks_wrong = ks_statistic(rep.pooled, grid_cdf(b.grid, lin));
    const Estimate e = mean_stderr(rep.pooled);
    rep.mean = e.mean;
    KahanSum v;
    for (double x : rep.pooled)
        v.add((x - e.mean) * (x - e.mean));
    rep.variance = v.value() / static_cast<double>(rep.pooled.size() - 1);
    return rep;
}

} // namespace fkq
