#include "fkq/branching.hpp"

#include "fkq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace fkq {

std::int64_t PopulationTree::reconstruct_alive(std::int64_t step) const
{
    std::int64_t count = 0;
    for (const auto& ind : individuals)
        count += ind.alive_at(step) ? 1 : 0;
    return count;
}

std::vector<double> PopulationTree::ancestral_path(std::int64_t id) const
{
    if (!trajectories_recorded)
        throw DomainError("trajectories were not recorded for this tree");
    std::vector<std::int64_t> chain;
    for (std::optional<std::int64_t> cur = id; cur; cur = individuals[static_cast<std::size_t>(*cur)].parent)
        chain.push_back(*cur);
    std::reverse(chain.begin(), chain.end());

    std::vector<double> path(static_cast<std::size_t>(steps + 1));
    for (std::size_t c = 0; c < chain.size(); ++c) {
        const auto& ind = individuals[static_cast<std::size_t>(chain[c])];
        const std::int64_t from = ind.birth_step;
        const std::int64_t to = c + 1 < chain.size() ? individuals[static_cast<std::size_t>(chain[c + 1])].birth_step : steps + 1;
        for (std::int64_t s = from; s < to; ++s)
            path[static_cast<std::size_t>(s)] = ind.trajectory[static_cast<std::size_t>(s - from)];
    }
    return path;
}

namespace {

std::int64_t step_count(double T, double dt)
{
    if (!(T > 0.0))
        throw DomainError("horizon must be positive");
    if (!(dt > 0.0) || dt > 1e-2 * (1.0 + 1e-12))
        throw DomainError("time step must lie in (0, 1e-2]");
    const auto steps = static_cast<std::int64_t>(std::llround(T / dt));
    if (std::abs(static_cast<double>(steps) * dt - T) > 1e-9 * T)
        throw DomainError("horizon must be a multiple of the time step");
    return steps;
}

struct Live {
    std::size_t idx;
    double x;
};

} // namespace

PopulationTree simulate_population(const ModelSpec& spec, double x0, double T, double dt, Rng& rng,
                                   const SimulationOptions& opt)
{
    if (opt.cap < 1)
        throw DomainError("population cap must be at least 1");
    PopulationTree tree;
    tree.T = T;
    tree.dt = dt;
    tree.steps = step_count(T, dt);
    tree.trajectories_recorded = opt.record_trajectories;
    const double sq = std::sqrt(dt);

    Individual root;
    root.id = 0;
    if (opt.record_trajectories)
        root.trajectory.push_back(x0);
    tree.individuals.push_back(std::move(root));
    std::vector<Live> live{{0, x0}}, next;
    tree.live_counts.push_back(1);
    std::size_t work = 0;

    for (std::int64_t j = 0; j < tree.steps && !live.empty(); ++j) {
        next.clear();
        for (const Live& L : live) {
            const double xo = L.x;
            const double xn = xo - spec.a(xo) * dt + sq * rng.normal();
            if (!std::isfinite(xn))
                throw NumericalError("trait became non-finite");
            const double bb = 0.5 * (spec.birth(xo) + spec.birth(xn));
            const double dd = 0.5 * (spec.death(xo) + spec.death(xn));
            if (bb * dt > std::numbers::ln2)
                throw NumericalError("birth rate too large for the time step");
            if (opt.record_trajectories)
                tree.individuals[L.idx].trajectory.push_back(xn);
            if (rng.uniform() < -std::expm1(-dd * dt)) {
                tree.individuals[L.idx].death_step = j + 1;
                continue;
            }
            next.push_back({L.idx, xn});
            if (rng.uniform() < std::expm1(bb * dt)) {
                Individual child;
                child.id = static_cast<std::int64_t>(tree.individuals.size());
                child.parent = tree.individuals[L.idx].id;
                child.birth_step = j + 1;
                if (opt.record_trajectories)
                    child.trajectory.push_back(xn);
                next.push_back({tree.individuals.size(), xn});
                tree.individuals.push_back(std::move(child));
            }
        }
        live.swap(next);
        tree.live_counts.push_back(static_cast<std::int64_t>(live.size()));
        work += live.size();
        if (work > opt.cap) {
            tree.truncated = true;
            break;
        }
    }
    while (static_cast<std::int64_t>(tree.live_counts.size()) < tree.steps + 1 && !tree.truncated)
        tree.live_counts.push_back(0);
    for (const Live& L : live) {
        tree.alive_ids.push_back(tree.individuals[L.idx].id);
        tree.final_traits.push_back(L.x);
    }
    return tree;
}

namespace {

unsigned resolve_threads(const McConfig& cfg)
{
    return cfg.threads == 0 ? default_threads() : cfg.threads;
}

McEstimate finish(const std::vector<double>& vals, const std::vector<char>& used, std::size_t reps,
                  std::size_t extinct)
{
    std::vector<double> kept;
    kept.reserve(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i)
        if (used[i])
            kept.push_back(vals[i]);
    const Estimate e = mean_stderr(kept);
    McEstimate out;
    out.mean = e.mean;
    out.stderr_ = e.stderr_;
    out.reps = reps;
    out.used = kept.size();
    out.cap_hits = reps - kept.size();
    out.extinct_fraction = reps ? static_cast<double>(extinct) / static_cast<double>(reps) : 0.0;
    return out;
}

} // namespace

std::vector<McEstimate> estimate_linear_functionals(const ModelSpec& spec,
                                                    const std::vector<std::function<double(double)>>& phis,
                                                    double x0, double T, double dt, std::size_t reps,
                                                    const McConfig& cfg)
{
    if (reps < 100)
        throw DomainError("need at least 100 replicas");
    const std::size_t m = phis.size();
    std::vector<std::vector<double>> vals(m, std::vector<double>(reps, 0.0));
    std::vector<char> used(reps, 0), extinct(reps, 0);
    parallel_for(reps, resolve_threads(cfg), [&](std::size_t i) {
        Rng rng(cfg.seed, i);
        const auto tree = simulate_population(spec, x0, T, dt, rng, {cfg.cap, false});
        if (tree.truncated)
            return;
        used[i] = 1;
        extinct[i] = tree.N_T() == 0;
        for (std::size_t f = 0; f < m; ++f) {
            KahanSum s;
            for (double x : tree.final_traits)
                s.add(phis[f](x));
            vals[f][i] = s.value();
        }
    });
    std::size_t nExt = 0;
    for (char e : extinct)
        nExt += static_cast<std::size_t>(e);
    std::vector<McEstimate> out;
    for (std::size_t f = 0; f < m; ++f)
        out.push_back(finish(vals[f], used, reps, nExt));
    return out;
}

McEstimate estimate_linear_functional(const ModelSpec& spec, const std::function<double(double)>& phi, double x0,
                                      double T, double dt, std::size_t reps, const McConfig& cfg)
{
    return estimate_linear_functionals(spec, {phi}, x0, T, dt, reps, cfg).front();
}

McEstimate ratio_limit_mc(const ModelSpec& spec, const std::function<double(double)>& phi, double x0, double T,
                          double dt, std::size_t reps, const McConfig& cfg)
{
    if (reps < 100)
        throw DomainError("need at least 100 replicas");
    std::vector<double> vals(reps, 0.0);
    std::vector<char> used(reps, 0);
    std::vector<char> extinct(reps, 0);
    parallel_for(reps, resolve_threads(cfg), [&](std::size_t i) {
        Rng rng(cfg.seed, i);
        const auto tree = simulate_population(spec, x0, T, dt, rng, {cfg.cap, false});
        if (tree.truncated)
            return;
        if (tree.N_T() == 0) {
            extinct[i] = 1;
            return;
        }
        KahanSum s;
        for (double x : tree.final_traits)
            s.add(phi(x));
        vals[i] = s.value() / static_cast<double>(tree.N_T());
        used[i] = 1;
    });
    std::size_t nExt = 0;
    for (char e : extinct)
        nExt += static_cast<std::size_t>(e);
    auto est = finish(vals, used, reps, nExt);
    est.cap_hits -= nExt;
    if (est.used == 0)
        throw SampleError("every tree went extinct");
    return est;
}

McEstimate feynman_kac_mc(const ModelSpec& spec, const std::function<double(double)>& phi, double x0, double T,
                          double dt, std::size_t reps, const McConfig& cfg, PathQuadrature quad)
{
    if (reps < 100)
        throw DomainError("need at least 100 replicas");
    const std::int64_t steps = step_count(T, dt);
    const double sq = std::sqrt(dt);
    std::vector<double> logw(reps), fval(reps);
    parallel_for(reps, resolve_threads(cfg), [&](std::size_t i) {
        Rng rng(cfg.seed, i);
        double x = x0, vOld = spec.V(x0);
        KahanSum lw;
        for (std::int64_t j = 0; j < steps; ++j) {
            const double xn = x - spec.a(x) * dt + sq * rng.normal();
            const double vNew = spec.V(xn);
            lw.add(quad == PathQuadrature::Trapezoid ? 0.5 * (vOld + vNew) * dt : vOld * dt);
            x = xn;
            vOld = vNew;
        }
        if (!std::isfinite(x))
            throw NumericalError("path became non-finite");
        logw[i] = lw.value();
        fval[i] = phi(x);
    });
    const double M = *std::max_element(logw.begin(), logw.end());
    std::vector<double> vals(reps);
    for (std::size_t i = 0; i < reps; ++i)
        vals[i] = std::exp(logw[i] - M) * fval[i];
    const Estimate e = mean_stderr(vals);
    const double scale = std::exp(M);
    if (!std::isfinite(scale))
        throw NumericalError("Feynman-Kac weight overflows");
    McEstimate out;
    out.mean = e.mean * scale;
    out.stderr_ = e.stderr_ * scale;
    out.reps = out.used = reps;
    return out;
}

RootSampler grid_sampler(const Grid& grid, std::span<const double> density)
{
    auto cum = std::make_shared<std::vector<double>>(grid.cumulative(density));
    const double total = cum->back();
    if (!(total > 0.0))
        throw DomainError("root density has no mass");
    for (double& v : *cum)
        v /= total;
    auto nodes = std::make_shared<std::vector<double>>(grid.nodes());
    return [cum, nodes](Rng& rng) {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cum->begin(), cum->end(), u);
        std::size_t i = it == cum->begin() ? 0 : static_cast<std::size_t>(it - cum->begin()) - 1;
        i = std::min(i, cum->size() - 2);
        const double c0 = (*cum)[i], c1 = (*cum)[i + 1];
        const double f = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
        return (*nodes)[i] + f * ((*nodes)[i + 1] - (*nodes)[i]);
    };
}

std::vector<SpinePath> sample_spines(const ModelSpec& spec, const RootSampler& root, double T, double dt,
                                     std::size_t reps, const McConfig& cfg, std::size_t first_replica)
{
    std::vector<std::optional<SpinePath>> slots(reps);
    parallel_for(reps, resolve_threads(cfg), [&](std::size_t i) {
        Rng rng(cfg.seed, first_replica + i);
        const double x0 = root(rng);
        const auto tree = simulate_population(spec, x0, T, dt, rng, {cfg.cap, true});
        if (tree.truncated || tree.N_T() == 0)
            return;
        const auto pick = std::min(tree.N_T() - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(tree.N_T())));
        SpinePath sp;
        sp.traits = tree.ancestral_path(tree.alive_ids[pick]);
        sp.times.resize(sp.traits.size());
        for (std::size_t s = 0; s < sp.times.size(); ++s)
            sp.times[s] = static_cast<double>(s) * dt;
        sp.weight = static_cast<double>(tree.N_T());
        sp.root = x0;
        slots[i] = std::move(sp);
    });
    std::vector<SpinePath> out;
    for (auto& s : slots)
        if (s)
            out.push_back(std::move(*s));
    return out;
}

std::vector<SpinePath> sample_spines(const ModelSpec& spec, double x0, double T, double dt, std::size_t reps,
                                     const McConfig& cfg)
{
    auto spines = sample_spines(spec, [x0](Rng&) { return x0; }, T, dt, reps, cfg);
    if (spines.empty())
        throw SampleError("every tree went extinct");
    return spines;
}

// ---------------------------------------------------------------------------

namespace {

/// Integrals of grid samples over consecutive intervals [edges[i], edges[i+1]].
std::vector<double> bin_integrals(const Grid& g, std::span<const double> f, const std::vector<double>& edges)
{
    const auto cum = g.cumulative(f);
    auto at = [&](double x) {
        if (x <= g.lo())
            return 0.0;
        if (x >= g.hi())
            return cum.back();
        const double s = (x - g.lo()) / g.h();
        const auto i = std::min(static_cast<std::size_t>(s), g.n() - 2);
        const double w = s - static_cast<double>(i);
        // Trapezoid accumulation up to x with f linear on the cell.
        const double fx = f[i] * (1.0 - w) + f[i + 1] * w;
        return cum[i] + 0.5 * (f[i] + fx) * w * g.h();
    };
    std::vector<double> out(edges.size() - 1);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
        out[i] = at(edges[i + 1]) - at(edges[i]);
    return out;
}

std::size_t bin_of(const std::vector<double>& edges, double x)
{
    const auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, x);
    return static_cast<std::size_t>(it - edges.begin()) - 1;
}

} // namespace

ReversalReport reversed_spine_transition_check(const ModelSpec& spec, const KernelEvaluator& ev,
                                               const ReversalConfig& cfg)
{
    if (!(cfg.t_lag > 0.0 && cfg.t_lag < cfg.T))
        throw DomainError("lag must lie in (0, T)");
    const auto& b = ev.basis();
    const Grid& g = b.grid;
    const auto steps = step_count(cfg.T, cfg.dt);
    const auto lagSteps = static_cast<std::int64_t>(std::llround(cfg.t_lag / cfg.dt));
    const auto smallSteps = std::max<std::int64_t>(1, std::llround(cfg.small_lag / cfg.dt));

    ReversalReport rep;
    rep.small_lag = static_cast<double>(smallSteps) * cfg.dt;
    const QsdMeasure nu = build_qsd(b);
    const auto mT = ev.mass_grid(cfg.T);
    std::vector<double> mu0(g.n());
    for (std::size_t i = 0; i < g.n(); ++i)
        mu0[i] = std::max(std::exp(ev.lambda0() * cfg.T) * mT[i] * nu.density[i], 0.0);
    rep.root_law_mass = g.integrate(mu0);
    const RootSampler root = grid_sampler(g, mu0);

    std::vector<double> w, z, y, ys;
    std::size_t trees = 0;
    while (trees < cfg.max_trees) {
        const auto spines = sample_spines(spec, root, cfg.T, cfg.dt, cfg.batch, cfg.mc, trees);
        trees += cfg.batch;
        for (const auto& sp : spines) {
            const double m = interpolate(g, mT, sp.root);
            if (!(m > 0.0))
                continue;
            w.push_back(sp.weight / m);
            z.push_back(sp.traits[static_cast<std::size_t>(steps)]);
            y.push_back(sp.traits[static_cast<std::size_t>(steps - lagSteps)]);
            ys.push_back(sp.traits[static_cast<std::size_t>(steps - smallSteps)]);
        }
        if (effective_sample_size(w) >= cfg.target_ess)
            break;
    }
    rep.trees = trees;
    rep.spines = w.size();
    rep.ess = effective_sample_size(w);
    if (rep.ess < 500.0) {
        rep.inconclusive = true;
        return rep;
    }

    // Bins: two outer catch-all bins around the requested range.
    std::vector<double> edges{g.lo()};
    for (std::size_t i = 0; i <= cfg.bins; ++i)
        edges.push_back(cfg.bin_lo + (cfg.bin_hi - cfg.bin_lo) * static_cast<double>(i) / static_cast<double>(cfg.bins));
    edges.push_back(g.hi());
    const std::size_t B = edges.size() - 1;
    rep.edges = edges;

    KahanSum sw;
    for (double v : w)
        sw.add(v);
    rep.marginal_empirical.assign(B, 0.0);
    rep.joint_empirical.assign(B, std::vector<double>(B, 0.0));
    for (std::size_t s = 0; s < w.size(); ++s) {
        const double p = w[s] / sw.value();
        const std::size_t i = bin_of(edges, z[s]), j = bin_of(edges, y[s]);
        rep.marginal_empirical[i] += p;
        rep.joint_empirical[i][j] += p;
    }

    rep.marginal_predicted = bin_integrals(g, nu.density, edges);

    // P_ij = e^{lambda_0 t}/Z sum_k e^{-lambda_k t} J_ki I_kj.
    const double t = static_cast<double>(lagSteps) * cfg.dt;
    std::vector<std::vector<double>> J(b.K()), I(b.K());
    std::vector<double> f(g.n());
    for (std::size_t k = 0; k < b.K(); ++k) {
        for (std::size_t i = 0; i < g.n(); ++i)
            f[i] = std::exp(-b.ell[i]) * b.psis[k][i];
        J[k] = bin_integrals(g, f, edges);
        for (std::size_t i = 0; i < g.n(); ++i)
            f[i] = b.psis[0][i] * b.psis[k][i];
        I[k] = bin_integrals(g, f, edges);
    }
    rep.joint_predicted.assign(B, std::vector<double>(B, 0.0));
    for (std::size_t k = 0; k < b.K(); ++k) {
        const double c = std::exp((ev.lambda0() - b.lambdas[k]) * t) / nu.Z;
        for (std::size_t i = 0; i < B; ++i)
            for (std::size_t j = 0; j < B; ++j)
                rep.joint_predicted[i][j] += c * J[k][i] * I[k][j];
    }

    double mtv = 0.0, ttv = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
        mtv += std::abs(rep.marginal_empirical[i] - rep.marginal_predicted[i]);
        const double nui = rep.marginal_predicted[i];
        for (std::size_t j = 0; j < B; ++j) {
            const double Q = nui > 1e-14 ? std::max(rep.joint_predicted[i][j], 0.0) / nui : 0.0;
            ttv += std::abs(rep.joint_empirical[i][j] - rep.marginal_empirical[i] * Q);
        }
    }
    rep.marginal_tv = 0.5 * mtv;
    rep.transition_tv = 0.5 * ttv;

    std::vector<double> inc(w.size());
    for (std::size_t s = 0; s < w.size(); ++s)
        inc[s] = ys[s] - z[s];
    const Estimate m1 = weighted_mean(w, inc);
    std::vector<double> sq(w.size());
    for (std::size_t s = 0; s < w.size(); ++s)
        sq[s] = (inc[s] - m1.mean) * (inc[s] - m1.mean);
    rep.small_lag_variance = weighted_mean(w, sq).mean;
    return rep;
}

ReversalChain reversal_identity_chain(const KernelEvaluator& ev, double T, double u, double r, double z, double y)
{
    const double s = T - u - r;
    if (!(s > 0.0 && u > 0.0 && r > 0.0))
        throw DomainError("need u, r > 0 and u + r < T");
    const auto& b = ev.basis();
    const Grid& g = b.grid;
    const double l0 = ev.lambda0();

    // p(s, x_i, y) on the grid nodes
    std::vector<double> py(b.K());
    for (std::size_t k = 0; k < b.K(); ++k)
        py[k] = std::exp(-b.lambdas[k] * s) * ev.psi_at(k, y);
    const double elly = ev.ell_at(y), ellz = ev.ell_at(z);
    std::vector<double> psx(g.n());
    for (std::size_t i = 0; i < g.n(); ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < b.K(); ++k)
            acc += py[k] * b.psis[k][i];
        psx[i] = std::exp(b.ell[i] - elly) * acc;
    }
    const auto mT = ev.mass_grid(T);
    const double mr = ev.mass(r, z);
    const double puyz = ev.p(u, y, z);
    const double th0z = ev.theta_at(0, z), th0y = ev.theta_at(0, y);

    std::vector<double> f1(g.n()), f2(g.n());
    for (std::size_t i = 0; i < g.n(); ++i) {
        const double rho0 = b.thetas[0][i] * std::exp(-2.0 * b.ell[i]);
        const double ratio = mT[i] != 0.0 ? (mr / mT[i]) * mT[i] : mr;
        f1[i] = psx[i] * puyz * ratio * std::exp(l0 * T) * rho0;
        f2[i] = psx[i] * rho0;
    }
    ReversalChain c;
    c.line1 = g.integrate(f1) / (std::exp(l0 * r) * mr * th0z * std::exp(-2.0 * ellz));
    c.line2 = std::exp(l0 * (T - r)) * puyz / th0z * std::exp(2.0 * ellz) * g.integrate(f2);
    c.line3 = std::exp(l0 * (T - r - s)) * th0y / th0z * std::exp(2.0 * ellz - 2.0 * elly) * puyz;
    c.line4 = std::exp(l0 * u) * th0y / th0z * ev.p(u, z, y);
    c.q = ev.q(u, z, y);
    return c;
}

} // namespace fkq
