#include "fkq/model.hpp"

#include "fkq/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fkq {

double ModelSpec::birth(double x) const
{
    if (b)
        return b(x);
    return std::max(V(x), 0.0);
}

double ModelSpec::death(double x) const
{
    if (d)
        return d(x);
    return std::max(-V(x), 0.0);
}

namespace {

double simpson_step(const RealFn& f, double lo, double hi, double flo, double fmid, double fhi,
                    double whole, double tol, int depth, int max_depth)
{
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    const double flm = f(lm), frm = f(rm);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    const double diff = left + right - whole;
    if (std::abs(diff) <= 15.0 * tol)
        return left + right + diff / 15.0;
    if (depth >= max_depth)
        throw NumericalError("adaptive Simpson did not converge; drift may be pathological");
    return simpson_step(f, lo, mid, flo, flm, fmid, left, 0.5 * tol, depth + 1, max_depth)
         + simpson_step(f, mid, hi, fmid, frm, fhi, right, 0.5 * tol, depth + 1, max_depth);
}

} // namespace

double adaptive_simpson(const RealFn& f, double lo, double hi, double tol, int max_depth)
{
    if (lo == hi)
        return 0.0;
    const double flo = f(lo), fhi = f(hi), fmid = f(0.5 * (lo + hi));
    if (!std::isfinite(flo) || !std::isfinite(fhi) || !std::isfinite(fmid))
        throw NumericalError("non-finite integrand");
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    return simpson_step(f, lo, hi, flo, fmid, fhi, whole, tol, 0, max_depth);
}

double ell(const ModelSpec& spec, double x)
{
    return adaptive_simpson(spec.a, 0.0, x, 1e-10);
}

namespace {

std::vector<double> ell_on_grid(const ModelSpec& spec, const Grid& grid)
{
    const std::size_t n = grid.n();
    std::vector<double> out(n);
    const std::size_t i0 = grid.nearest(0.0);
    out[i0] = ell(spec, grid[i0]);
    for (std::size_t i = i0 + 1; i < n; ++i)
        out[i] = out[i - 1] + adaptive_simpson(spec.a, grid[i - 1], grid[i], 1e-13);
    for (std::size_t i = i0; i-- > 0;)
        out[i] = out[i + 1] - adaptive_simpson(spec.a, grid[i], grid[i + 1], 1e-13);
    return out;
}

} // namespace

ReducedSpec reduce(const ModelSpec& spec, const Grid& grid)
{
    ReducedSpec r{grid, {}, {}, {}, {}, {}, 0.0, 0.0, 0.0, spec.beta, spec.gamma};
    const std::size_t n = grid.n();
    r.a = grid.sample(spec.a);
    r.a_prime = grid.sample(spec.a_prime);
    r.V = grid.sample(spec.V);
    r.ell = ell_on_grid(spec, grid);
    r.tildeV.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        r.tildeV[i] = r.V[i] + 0.5 * (r.a_prime[i] - r.a[i] * r.a[i]);
    r.tildeA = *std::max_element(r.tildeV.begin(), r.tildeV.end());
    r.tildeE = 0.5 * spec.E_const;

    // Largest |x| where the decay condition fails, then the first node past it.
    double worst = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ax = std::abs(grid[i]);
        if (r.tildeV[i] > -r.tildeE * ax)
            worst = std::max(worst, ax);
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const double ax = std::abs(grid[i]);
        if (ax > worst && ax >= spec.x0)
            best = std::min(best, ax);
    }
    if (!std::isfinite(best) || worst >= std::min(std::abs(grid.lo()), std::abs(grid.hi())))
        throw AssumptionError("reduced potential does not decay like -(E/2)|x| inside the grid");
    r.tilde_x0 = best;
    return r;
}

bool AssumptionReport::all_pass() const
{
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

const HypothesisCheck& AssumptionReport::get(const std::string& name) const
{
    for (const auto& c : checks)
        if (c.name == name)
            return c;
    throw DomainError("no hypothesis named " + name);
}

namespace {

/// Track the worst excess of a pointwise inequality lhs <= rhs.
struct Worst {
    double excess = -std::numeric_limits<double>::infinity();
    double x = 0.0;
    void see(double e, double at)
    {
        if (e > excess) {
            excess = e;
            x = at;
        }
    }
};

HypothesisCheck make_check(std::string name, const Worst& w, double slack, std::string note = {})
{
    return {std::move(name), w.excess <= slack, w.x, w.excess, std::move(note)};
}

bool outward_nonincreasing(const std::vector<double>& V, std::size_t from, std::size_t to, int step)
{
    for (auto i = static_cast<long>(from); i != static_cast<long>(to); i += step)
        if (V[static_cast<std::size_t>(i + step)] > V[static_cast<std::size_t>(i)] + 1e-12)
            return false;
    return true;
}

} // namespace

AssumptionReport validate_assumptions(const ModelSpec& spec, const Grid& grid)
{
    AssumptionReport rep;
    const std::size_t n = grid.n();
    const auto V = grid.sample(spec.V);
    const auto ellv = ell_on_grid(spec, grid);

    Worst h02, h03, h4, bpos, dpos, vbd;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = grid[i];
        h02.see(std::abs(ellv[i]) - spec.gamma - spec.beta * std::abs(x), x);
        const double a = spec.a(x);
        h03.see(spec.a_prime(x) - a * a - spec.M_upper, x);
        if (std::abs(x) >= spec.x0)
            h4.see(V[i] + spec.E_const * std::abs(x), x);
        const double b = spec.birth(x), d = spec.death(x);
        bpos.see(-b, x);
        dpos.see(-d, x);
        vbd.see(std::abs(V[i] - (b - d)), x);
    }
    rep.checks.push_back(make_check("H0.2", h02, 1e-9));
    rep.checks.push_back(make_check("H0.3", h03, 1e-12));
    rep.checks.push_back({"H1", true, 0.0, 0.0, "continuity assumed for supplied functions"});

    const auto maxIt = std::max_element(V.begin(), V.end());
    rep.A_V = *maxIt;
    const auto iMax = static_cast<std::size_t>(maxIt - V.begin());
    HypothesisCheck h2{"H2", iMax != 0 && iMax != n - 1, grid[iMax], *maxIt, "sup of V must sit inside the grid"};
    rep.checks.push_back(h2);

    // Proxy for V -> -inf: V decreases outward over the outer quarter of each side,
    // and the wall values sit below every value on the inner half.
    const std::size_t q = n / 4;
    const bool mono = outward_nonincreasing(V, n - 1 - q, n - 1, 1) && outward_nonincreasing(V, q, 0, -1);
    double innerMin = std::numeric_limits<double>::infinity();
    for (std::size_t i = n / 4; i < n - n / 4; ++i)
        innerMin = std::min(innerMin, V[i]);
    const double wall = std::max(V.front(), V.back());
    rep.checks.push_back({"H3", mono && wall < innerMin, V.front() >= V.back() ? grid[0] : grid[n - 1],
                          wall - innerMin, "outward-monotone proxy on the outer quarter"});

    rep.checks.push_back(make_check("H4", h4, 1e-12));
    rep.checks.push_back(make_check("b>=0", bpos, 0.0));
    rep.checks.push_back(make_check("d>=0", dpos, 0.0));
    rep.checks.push_back(make_check("V=b-d", vbd, 1e-12));
    return rep;
}

// ---------------------------------------------------------------------------

namespace {

/// Cubic Hermite inverse of a monotone table with dy/dx = sigma(y), then Newton.
struct InverseMap {
    std::shared_ptr<const std::vector<double>> ys, gs;
    RealFn sigma;
    bool increasing = true;

    double G(double y) const
    {
        const auto& Y = *ys;
        const auto it = std::upper_bound(Y.begin(), Y.end(), y);
        std::size_t i = it == Y.begin() ? 0 : static_cast<std::size_t>(it - Y.begin()) - 1;
        i = std::min(i, Y.size() - 2);
        const RealFn inv = [this](double u) { return 1.0 / sigma(u); };
        return (*gs)[i] + adaptive_simpson(inv, Y[i], y, 1e-14);
    }

    double operator()(double x) const
    {
        const auto& Y = *ys;
        const auto& Gt = *gs;
        const std::size_t m = Gt.size();
        std::size_t i;
        if (increasing) {
            const auto it = std::upper_bound(Gt.begin(), Gt.end(), x);
            i = it == Gt.begin() ? 0 : static_cast<std::size_t>(it - Gt.begin()) - 1;
        } else {
            const auto it = std::upper_bound(Gt.begin(), Gt.end(), x, std::greater<>());
            i = it == Gt.begin() ? 0 : static_cast<std::size_t>(it - Gt.begin()) - 1;
        }
        i = std::min(i, m - 2);
        const double g0 = Gt[i], g1 = Gt[i + 1];
        const double dg = g1 - g0;
        const double s = (x - g0) / dg;
        const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
        const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
        double y = h00 * Y[i] + h10 * dg * sigma(Y[i]) + h01 * Y[i + 1] + h11 * dg * sigma(Y[i + 1]);
        for (int it = 0; it < 2; ++it)
            y -= (G(y) - x) * sigma(y);
        return y;
    }
};

} // namespace

SigmaReduction reduce_sigma(const SigmaInput& in, const Grid& y_domain)
{
    const std::size_t n = y_domain.n();
    const auto sig = y_domain.sample(in.sigma);
    const bool positive = sig[0] > 0.0;
    for (double s : sig)
        if (s == 0.0 || (s > 0.0) != positive)
            throw DomainError("sigma vanishes or changes sign: G is not monotone");

    auto ys = std::make_shared<std::vector<double>>(y_domain.nodes());
    auto gs = std::make_shared<std::vector<double>>(n);
    const RealFn inv = [&](double u) { return 1.0 / in.sigma(u); };
    const std::size_t i0 = y_domain.nearest(0.0);
    (*gs)[i0] = adaptive_simpson(inv, 0.0, y_domain[i0], 1e-14);
    for (std::size_t i = i0 + 1; i < n; ++i)
        (*gs)[i] = (*gs)[i - 1] + adaptive_simpson(inv, y_domain[i - 1], y_domain[i], 1e-14);
    for (std::size_t i = i0; i-- > 0;)
        (*gs)[i] = (*gs)[i + 1] - adaptive_simpson(inv, y_domain[i], y_domain[i + 1], 1e-14);

    auto inverse = std::make_shared<InverseMap>(InverseMap{ys, gs, in.sigma, positive});
    SigmaReduction out{{}, positive ? Grid::interval(gs->front(), gs->back(), n)
                                    : Grid::interval(gs->back(), gs->front(), n),
                       ys, gs, {}, {}};
    out.G = [inverse](double y) { return inverse->G(y); };
    out.G_inv = [inverse](double x) { return (*inverse)(x); };

    const SigmaInput src = in;
    ModelSpec& m = out.spec;
    m.a = [src, inverse](double x) {
        const double y = (*inverse)(x);
        return src.a0(y) / src.sigma(y) + 0.5 * src.sigma_prime(y);
    };
    m.a_prime = [src, inverse](double x) {
        const double y = (*inverse)(x);
        const double s = src.sigma(y);
        return src.a0_prime(y) - src.a0(y) * src.sigma_prime(y) / s + 0.5 * s * src.sigma_second(y);
    };
    m.V = [src, inverse](double x) { return src.V((*inverse)(x)); };
    if (in.b)
        m.b = [src, inverse](double x) { return src.b((*inverse)(x)); };
    if (in.d)
        m.d = [src, inverse](double x) { return src.d((*inverse)(x)); };

    double minSig = std::numeric_limits<double>::infinity();
    for (double s : sig)
        minSig = std::min(minSig, std::abs(s));
    double maxA = 0.0, maxM = -std::numeric_limits<double>::infinity();
    for (double x : out.grid.nodes()) {
        const double a = m.a(x);
        maxA = std::max(maxA, std::abs(a));
        maxM = std::max(maxM, m.a_prime(x) - a * a);
    }
    m.beta = maxA;
    m.gamma = 0.0;
    m.E_const = in.E_const * minSig;
    m.x0 = std::max(std::abs(out.G(std::clamp(in.x0, y_domain.lo(), y_domain.hi()))),
                    std::abs(out.G(std::clamp(-in.x0, y_domain.lo(), y_domain.hi()))));
    m.M_upper = maxM;
    m.label = "sigma-reduced";
    return out;
}

} // namespace fkq
