#include "fkq/validate.hpp"

#include "fkq/qprocess.hpp"
#include "fkq/qsd.hpp"
#include "fkq/semigroup.hpp"
#include "fkq/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <sstream>

namespace fkq::hermite {

bool ValidationReport::all_pass() const
{
    return std::all_of(suites.begin(), suites.end(), [](const auto& s) { return s.pass; });
}

namespace {

SuiteResult make(std::string name, double worst, double tol, std::string detail = {})
{
    return {std::move(name), worst <= tol, worst, tol, std::move(detail)};
}

SuiteResult from_bound(const BoundReport& r)
{
    double worst = -1e300;
    for (const auto& e : r.entries)
        if (e.applicable)
            worst = std::max(worst, e.lhs - e.rhs);
    SuiteResult s{r.name, r.all_pass(), worst, 0.0, r.note};
    return s;
}

} // namespace

ValidationReport validate(const HermiteModel& m, const ValidationOptions& opt)
{
    ValidationReport rep;
    rep.model = m;
    const double s = m.sigma;

    // Eigenpairs of 1/2 d^2 - x^2/(2 sigma^2).
    const auto rb = solve_eigen(reduce(r_picture_model(m), Grid(opt.L, opt.n)), opt.K);
    double eig = 0.0, vec = 0.0;
    for (int k = 0; k <= 10; ++k) {
        const auto ce = closed_eigen(m, k);
        eig = std::max(eig, std::abs(rb.lambdas[static_cast<std::size_t>(k)] - ce.lambda) / ce.lambda);
        const auto& p = rb.psis[static_cast<std::size_t>(k)];
        double dot = 0.0;
        for (std::size_t i = 0; i < rb.n(); ++i)
            dot += p[i] * ce.psi(rb.grid[i]);
        const double sgn = dot >= 0 ? 1.0 : -1.0;
        for (std::size_t i = 0; i < rb.n(); ++i)
            vec = std::max(vec, std::abs(p[i] - sgn * ce.psi(rb.grid[i])));
    }
    rep.suites.push_back(make("eigenvalues", eig, 1e-4, "relative, k <= 10"));
    rep.suites.push_back(make("eigenfunctions", vec, 1e-4, "sup norm after sign alignment, k <= 10"));

    const auto sup = check_sup_bound(rb);
    rep.suites.push_back(from_bound(sup));
    double cramer = 0.0;
    const double cb = std::pow(1.0 / (s * std::numbers::pi), 0.25);
    for (const auto& e : sup.entries)
        cramer = std::max(cramer, e.lhs - cb);
    rep.suites.push_back(make("cramer", cramer, 1e-6, "max |Psi_k| - (sigma pi)^{-1/4}"));
    rep.suites.push_back(from_bound(check_growth_bound(rb)));
    rep.suites.push_back(from_bound(check_derivative_bound(rb, 20)));

    // Unit-diffusion model x = y / sigma.
    auto xb = std::make_shared<SpectralBasis>(solve_eigen(reduce(reduced_model(m), Grid(opt.L, opt.n)), opt.K));
    const KernelEvaluator ev(xb);
    rep.numerical_lambda0 = ev.lambda0();
    rep.literal_lambda0 = closed_lambda0_original(m);
    {
        std::ostringstream d;
        d << "numerical " << rep.numerical_lambda0 << ", literal closed form " << rep.literal_lambda0;
        rep.suites.push_back(make("principal_eigenvalue", std::abs(rep.numerical_lambda0 - principal_decay_rate(m)),
                                  1e-4, d.str()));
    }

    const auto nu = build_qsd(*xb);
    double qe = 0.0;
    for (std::size_t i = 0; i < xb->n(); ++i)
        qe = std::max(qe, std::abs(nu.density[i] / s - closed_qsd(m, s * xb->grid[i])));
    rep.suites.push_back(make("qsd", qe, 1e-6, "density in y, sup over nodes"));

    // Yaglom: gap is sigma in these units, so wait at least 6 / sigma.
    const double t = std::max(6.0, 6.0 / s);
    double ye = 0.0;
    for (double y : {0.0, m.c, 1.0}) {
        const double lim = closed_mass_limit(m, y);
        ye = std::max(ye, std::abs(std::exp(ev.lambda0() * t) * ev.mass(t, y / s) - lim) / lim);
    }
    rep.suites.push_back(make("mass_limit", ye, 5e-3, "relative, t = " + std::to_string(t)));

    const QProcessModel qm(xb);
    double de = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double y = -3.0 + 6.0 * i / 19.0;
        de = std::max(de, std::abs(s * qm.drift(y / s) + s * y));
    }
    rep.suites.push_back(make("q_drift", de, 1e-5, "sigma * drift(y / sigma) against -sigma y"));
    return rep;
}

} // namespace fkq::hermite
