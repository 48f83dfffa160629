#include "fkq/spectral.hpp"

#include "fkq/errors.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace fkq {

namespace {

constexpr double kRescale = 1e250;

/// Eigenvector of the 3-point operator at a known eigenvalue by shooting from both walls.
/// The recurrence is stable while moving from a wall towards the allowed region, so the
/// tails keep relative accuracy instead of sitting at roundoff level.
std::vector<double> shoot(const std::vector<double>& tV, double h, double lambda)
{
    const std::size_t n = tV.size();
    const double h2 = 2.0 * h * h;
    std::size_t il = n, ir = 0;
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (tV[i] + lambda > 0.0) {
            il = std::min(il, i);
            ir = i;
        }
    if (il == n) {
        il = 1;
        ir = n - 2;
    }

    std::vector<double> left(n, 0.0);
    left[1] = 1.0;
    for (std::size_t i = 1; i < ir; ++i) {
        left[i + 1] = (2.0 - h2 * (tV[i] + lambda)) * left[i] - left[i - 1];
        if (std::abs(left[i + 1]) > kRescale)
            for (std::size_t j = 0; j <= i + 1; ++j)
                left[j] /= kRescale;
    }
    std::size_t m = il;
    for (std::size_t i = il; i <= ir; ++i)
        if (std::abs(left[i]) > std::abs(left[m]))
            m = i;

    std::vector<double> right(n, 0.0);
    right[n - 2] = 1.0;
    for (std::size_t i = n - 2; i > m; --i) {
        right[i - 1] = (2.0 - h2 * (tV[i] + lambda)) * right[i] - right[i + 1];
        if (std::abs(right[i - 1]) > kRescale)
            for (std::size_t j = i - 1; j < n; ++j)
                right[j] /= kRescale;
    }
    if (right[m] == 0.0 || !std::isfinite(right[m]))
        throw NumericalError("eigenvector shooting failed to match");

    const double scale = left[m] / right[m];
    std::vector<double> psi(n, 0.0);
    for (std::size_t i = 0; i <= m; ++i)
        psi[i] = left[i];
    for (std::size_t i = m + 1; i < n; ++i)
        psi[i] = right[i] * scale;

    double mx = 0.0;
    for (double v : psi)
        mx = std::max(mx, std::abs(v));
    double s = 0.0;
    for (double& v : psi) {
        v /= mx;
        s += v * v;
    }
    const double norm = std::sqrt(s * h);
    for (double& v : psi)
        v /= norm;
    return psi;
}

double residual_norm(const std::vector<double>& tV, double h, double lambda, const std::vector<double>& psi)
{
    double r = 0.0, scale = 0.0;
    const double c = 0.5 / (h * h);
    for (std::size_t i = 1; i + 1 < psi.size(); ++i) {
        const double Hpsi = -c * (psi[i - 1] - 2.0 * psi[i] + psi[i + 1]) - tV[i] * psi[i];
        r = std::max(r, std::abs(Hpsi - lambda * psi[i]));
        scale = std::max(scale, std::abs(psi[i]));
    }
    return r / (scale * (c + std::abs(lambda) + 1.0));
}

/// Fallback when shooting does not reproduce an eigenvector: LAPACK inverse iteration.
std::vector<double> inverse_iteration(const std::vector<double>& diag, const std::vector<double>& off,
                                      double lambda, double h)
{
    const lapack_int m = static_cast<lapack_int>(diag.size());
    std::vector<double> z(diag.size());
    lapack_int one = 1, block = 1, split = m, ifail = 0;
    double w = lambda;
    const lapack_int info = LAPACKE_dstein(LAPACK_COL_MAJOR, m, diag.data(), off.data(), one, &w, &block,
                                           &split, z.data(), m, &ifail);
    if (info != 0)
        throw NumericalError("tridiagonal inverse iteration did not converge");
    std::vector<double> psi(diag.size() + 2, 0.0);
    for (std::size_t i = 0; i < z.size(); ++i)
        psi[i + 1] = z[i] / std::sqrt(h);
    return psi;
}

void fix_sign(std::vector<double>& psi)
{
    for (double v : psi)
        if (v != 0.0) {
            if (v < 0.0)
                for (double& u : psi)
                    u = -u;
            return;
        }
}

} // namespace

void tridiagonal_eigenpairs(const std::vector<double>& tildeV, double h, std::size_t K,
                            std::vector<double>& lambdas, std::vector<std::vector<double>>& psis,
                            double degeneracy_gap)
{
    const std::size_t n = tildeV.size();
    const std::size_t m = n - 2;
    std::vector<double> diag(m), off(m - 1, -0.5 / (h * h));
    for (std::size_t i = 0; i < m; ++i)
        diag[i] = 1.0 / (h * h) - tildeV[i + 1];

    lapack_int found = 0, nsplit = 0;
    std::vector<double> w(m);
    std::vector<lapack_int> iblock(m), isplit(m);
    const double abstol = 2.0 * LAPACKE_dlamch('S');
    const lapack_int info = LAPACKE_dstebz('I', 'E', static_cast<lapack_int>(m), 0.0, 0.0, 1,
                                           static_cast<lapack_int>(K), abstol, diag.data(), off.data(), &found,
                                           &nsplit, w.data(), iblock.data(), isplit.data());
    if (info != 0 || found != static_cast<lapack_int>(K))
        throw NumericalError("tridiagonal eigenvalue bisection did not converge");

    lambdas.assign(w.begin(), w.begin() + static_cast<long>(K));
    for (std::size_t k = 0; k + 1 < K; ++k)
        if (lambdas[k + 1] - lambdas[k] < degeneracy_gap) {
            std::ostringstream os;
            os << "eigenvalues " << k << " and " << k + 1 << " are " << lambdas[k + 1] - lambdas[k]
               << " apart; the domain is probably too small";
            throw NearDegenerateError(os.str());
        }

    psis.assign(K, {});
    for (std::size_t k = 0; k < K; ++k) {
        auto psi = shoot(tildeV, h, lambdas[k]);
        if (!(residual_norm(tildeV, h, lambdas[k], psi) < 1e-9) || sign_changes(psi) != static_cast<int>(k))
            psi = inverse_iteration(diag, off, lambdas[k], h);
        fix_sign(psi);
        psis[k] = std::move(psi);
    }
}

int sign_changes(const std::vector<double>& f)
{
    int count = 0;
    int last = 0;
    for (double v : f) {
        const int s = (v > 0.0) - (v < 0.0);
        if (s == 0)
            continue;
        if (last != 0 && s != last)
            ++count;
        last = s;
    }
    return count;
}

SpectralBasis solve_eigen(const ReducedSpec& reduced, std::size_t K, const SolveOptions& opt)
{
    const Grid& g = reduced.grid;
    if (K < 2)
        throw DomainError("need at least two modes");
    if (g.n() < 20 * K)
        throw DomainError("grid too coarse for the requested number of modes");

    SpectralBasis b{g, {}, {}, {}, {}, reduced.ell, reduced.tildeV, reduced.a, reduced.a_prime, reduced.V,
                    reduced.tildeA, reduced.tildeE, reduced.tilde_x0, reduced.beta, reduced.gamma,
                    opt.richardson};
    tridiagonal_eigenpairs(reduced.tildeV, g.h(), K, b.lambdas, b.psis, opt.degeneracy_gap);

    if (opt.richardson) {
        // Fine grid at h/2 sampled back on the coarse nodes.
        const std::size_t nf = 2 * g.n() - 1;
        std::vector<double> fineV(nf);
        for (std::size_t i = 0; i < g.n(); ++i)
            fineV[2 * i] = reduced.tildeV[i];
        for (std::size_t i = 0; i + 1 < g.n(); ++i) {
            const double x = 0.5 * (g[i] + g[i + 1]);
            fineV[2 * i + 1] = interpolate(g, reduced.tildeV, x);
        }
        std::vector<double> lf;
        std::vector<std::vector<double>> pf;
        tridiagonal_eigenpairs(fineV, 0.5 * g.h(), K, lf, pf, opt.degeneracy_gap);
        for (std::size_t k = 0; k < K; ++k) {
            b.lambdas[k] = (4.0 * lf[k] - b.lambdas[k]) / 3.0;
            for (std::size_t i = 0; i < g.n(); ++i)
                b.psis[k][i] = (4.0 * pf[k][2 * i] - b.psis[k][i]) / 3.0;
        }
        // Modified Gram-Schmidt in the trapezoid inner product.
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t j = 0; j < k; ++j) {
                const double c = g.integrate_product(b.psis[k], b.psis[j]);
                for (std::size_t i = 0; i < g.n(); ++i)
                    b.psis[k][i] -= c * b.psis[j][i];
            }
            const double nrm = std::sqrt(g.integrate_product(b.psis[k], b.psis[k]));
            for (double& v : b.psis[k])
                v /= nrm;
            fix_sign(b.psis[k]);
        }
        for (std::size_t k = 0; k + 1 < K; ++k)
            if (!(b.lambdas[k + 1] > b.lambdas[k]))
                throw NumericalError("extrapolated eigenvalues lost their ordering");
    }

    b.dpsis.resize(K);
    b.thetas.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        b.dpsis[k] = g.derivative(b.psis[k]);
        b.thetas[k].resize(g.n());
        for (std::size_t i = 0; i < g.n(); ++i)
            b.thetas[k][i] = b.psis[k][i] * std::exp(b.ell[i]);
    }
    return b;
}

// ---------------------------------------------------------------------------

bool BoundReport::all_pass() const
{
    return consistent && std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.pass(); });
}

double BoundReport::constant(const std::string& key) const
{
    for (const auto& [k, v] : constants)
        if (k == key)
            return v;
    throw DomainError("no constant named " + key);
}

double growth_constant(double tilde_x0, double tildeE)
{
    return std::cbrt(tildeE * tildeE / (8.0 * tilde_x0 + 2.0));
}

BoundReport check_growth_bound(const SpectralBasis& basis)
{
    BoundReport rep{"growth_lambda", {}, true, {}, {}};
    double S0 = 0.0;
    for (std::size_t i = 0; i < basis.n(); ++i)
        if (std::abs(basis.grid[i]) <= basis.tilde_x0)
            S0 = std::max(S0, std::abs(basis.tildeV[i]));
    const double C = growth_constant(basis.tilde_x0, basis.tildeE);
    rep.constants = {{"S0", S0}, {"C", C}};
    for (std::size_t k = 0; k < basis.K(); ++k) {
        const double lam = basis.lambdas[k];
        rep.entries.push_back({k, lam > S0, C * std::cbrt(static_cast<double>(k)), lam});
    }
    return rep;
}

BoundReport check_sup_bound(const SpectralBasis& basis)
{
    BoundReport rep{"boundPsik", {}, true, {}, {}};
    const double c = std::pow(std::numbers::e / std::numbers::pi, 0.25);
    if (basis.lambdas[0] + basis.tildeA <= 1e-12) {
        rep.consistent = false;
        rep.note = "lambda_0 + A~ <= 0 contradicts the a priori estimate; basis is inconsistent";
    }
    for (std::size_t k = 0; k < basis.K(); ++k) {
        double mx = 0.0;
        for (double v : basis.psis[k])
            mx = std::max(mx, std::abs(v));
        const double s = basis.lambdas[k] + basis.tildeA;
        rep.entries.push_back({k, true, mx, s > 0.0 ? c * std::pow(s, 0.25) : 0.0});
    }
    return rep;
}

namespace {

double log_sum_exp(double a, double b)
{
    const double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

struct LogDecay {
    double t0, x1, logGamma, logC1;
};

LogDecay log_decay(double R, double tildeA, double tildeE, double tilde_x0)
{
    if (!(R > 0.0))
        throw DomainError("decay rate R must be positive");
    const double t0 = 2.0 * R / tildeE;
    const double x1 = std::max(2.0 * tilde_x0, 8.0 * R * t0 + std::sqrt(8.0 * t0));
    const double pre = 1.0 / std::pow(4.0 * std::numbers::pi, 0.25)
                     + 1.0 / std::pow(2.0 * std::numbers::pi * std::numbers::pi, 0.25);
    const double term1 = std::log(pre) + std::abs(tildeA + 4.0 * R * R) * t0;
    const double term2 = 0.25 * std::log(std::numbers::e / std::numbers::pi) + R * x1;
    const double logGamma = log_sum_exp(term1, term2);
    return {t0, x1, logGamma, logGamma - 0.25 * std::log(t0)};
}

} // namespace

DecayConstants decay_constants(double R, double tildeA, double tildeE, double tilde_x0)
{
    const auto l = log_decay(R, tildeA, tildeE, tilde_x0);
    return {l.t0, l.x1, std::exp(l.logGamma), std::exp(l.logC1)};
}

double log_C1(double R, double tildeA, double tildeE, double tilde_x0)
{
    return log_decay(R, tildeA, tildeE, tilde_x0).logC1;
}

BoundReport check_decay_bound(const SpectralBasis& basis, double R)
{
    const auto l = log_decay(R, basis.tildeA, basis.tildeE, basis.tilde_x0);
    BoundReport rep{"boundPsik2", {}, true, "entries compare logarithms of both sides", {}};
    rep.constants = {{"t0", l.t0}, {"x1", l.x1}, {"log_Gamma", l.logGamma}, {"log_C1", l.logC1}};
    for (std::size_t k = 0; k < basis.K(); ++k) {
        double lhs = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < basis.n(); ++i) {
            const double v = std::abs(basis.psis[k][i]);
            if (v > 0.0)
                lhs = std::max(lhs, R * std::abs(basis.grid[i]) + std::log(v));
        }
        rep.entries.push_back({k, true, lhs, l.logC1 + basis.lambdas[k] * l.t0});
    }
    return rep;
}

BoundReport check_derivative_bound(const SpectralBasis& basis, std::size_t kmax)
{
    if (basis.K() < 3)
        throw DomainError("derivative bound needs Psi_2");
    BoundReport rep{"growthPsi'k", {}, true, {}, {}};
    const Grid& g = basis.grid;
    const auto& u = basis.psis[2];
    const auto& du = basis.dpsis[2];

    // Zeros of Psi_2 by linear interpolation between sign changes.
    std::vector<std::pair<std::size_t, double>> zeros;
    for (std::size_t i = 1; i + 2 < g.n(); ++i)
        if ((u[i] > 0.0) != (u[i + 1] > 0.0) && u[i] != 0.0 && u[i + 1] != 0.0) {
            const double s = u[i] / (u[i] - u[i + 1]);
            zeros.emplace_back(i, g[i] + s * g.h());
        }
    if (zeros.size() != 2) {
        rep.consistent = false;
        rep.note = "Psi_2 does not have exactly two zeros";
        return rep;
    }
    const double x1 = zeros[0].second;
    std::size_t istar = zeros[0].first + 1;
    for (std::size_t i = zeros[0].first + 1; i <= zeros[1].first; ++i)
        if (std::abs(du[i]) < std::abs(du[istar]))
            istar = i;
    const double xstar = g[istar];
    const double uStar = std::abs(u[istar]);
    const double du1 = std::abs(interpolate(g, du, x1));
    const double c = std::pow(std::numbers::e / std::numbers::pi, 0.25);
    const double A2 = (c * du1 + 2.0) / uStar;
    const double D1 = (c * du1 * basis.tildeA + 2.0 * std::abs(basis.lambdas[2])) / uStar;

    std::size_t k0 = basis.K();
    for (std::size_t k = 0; k < basis.K(); ++k)
        if (basis.lambdas[k] + basis.tildeA >= 1.0) {
            k0 = k;
            break;
        }
    double A1 = D1;
    for (std::size_t j = 0; j < k0 && j < basis.K(); ++j)
        A1 = std::max(A1, std::abs(basis.dpsis[j][istar]) + A2 * std::abs(basis.lambdas[j]));
    if (D1 < 0.0)
        rep.note = "D1 is negative for this potential (flagged, not failed)";

    rep.constants = {{"x_star", xstar}, {"x1", x1}, {"A1", A1}, {"A2", A2}, {"D1", D1},
                     {"k0", static_cast<double>(k0)}};
    const std::size_t last = std::min(kmax + 1, basis.K());
    for (std::size_t k = 0; k < last; ++k)
        rep.entries.push_back({k, k >= k0, std::abs(basis.dpsis[k][istar]), A1 + A2 * basis.lambdas[k]});
    return rep;
}

} // namespace fkq
