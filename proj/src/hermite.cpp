#include "fkq/hermite.hpp"

#include "fkq/errors.hpp"

#include <cmath>
#include <numbers>

namespace fkq::hermite {

double hermite_poly(int k, double x)
{
    if (k < 0)
        throw DomainError("Hermite degree must be nonnegative");
    if (k > 170)
        throw DomainError("Hermite degree above 170 overflows the normalizers");
    double h0 = 1.0;
    if (k == 0)
        return h0;
    double h1 = 2.0 * x;
    for (int j = 1; j < k; ++j) {
        const double h2 = 2.0 * x * h1 - 2.0 * j * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

double closed_psi(const HermiteModel& m, int k, double x)
{
    const double s = m.sigma;
    // log C_k = -1/4 log sigma - 1/2 (k log 2 + log k! + 1/2 log pi)
    const double logC = -0.25 * std::log(s)
                      - 0.5 * (k * std::numbers::ln2 + std::lgamma(k + 1.0) + 0.5 * std::log(std::numbers::pi));
    const double u = x / std::sqrt(s);
    return hermite_poly(k, u) * std::exp(logC - x * x / (2.0 * s));
}

ClosedEigen closed_eigen(const HermiteModel& m, int k)
{
    hermite_poly(k, 0.0);
    return {(k + 0.5) / m.sigma, [m, k](double x) { return closed_psi(m, k, x); }};
}

double closed_lambda0_original(const HermiteModel& m)
{
    return 1.0 - 0.5 * m.c * m.c - 0.5 * m.sigma;
}

double principal_decay_rate(const HermiteModel& m)
{
    return 0.5 * m.sigma + 0.5 * m.c * m.c - 1.0;
}

double closed_qsd(const HermiteModel& m, double y)
{
    const double s = m.sigma;
    return std::exp(-(y + m.c) * (y + m.c) / (2.0 * s)) / std::sqrt(2.0 * std::numbers::pi * s);
}

double closed_theta0(const HermiteModel& m, double y)
{
    const double s = m.sigma;
    return std::exp(m.c * m.c / (2.0 * s) - (y - m.c) * (y - m.c) / (2.0 * s)) / std::pow(std::numbers::pi * s, 0.25);
}

double closed_mass_limit(const HermiteModel& m, double y)
{
    const double s = m.sigma;
    return std::numbers::sqrt2 * std::exp(m.c * m.c / s - (y - m.c) * (y - m.c) / (2.0 * s));
}

QParams closed_q_params(const HermiteModel& m)
{
    return {m.sigma, m.sigma, m.sigma * m.sigma / (2.0 * m.sigma)};
}

namespace {

/// Smallest x0 with 1 - s2 x^2/2 <= -|x| for |x| >= x0.
double decay_threshold(double s2)
{
    return (1.0 + std::sqrt(1.0 + 2.0 * s2)) / s2;
}

} // namespace

ModelSpec reduced_model(const HermiteModel& m)
{
    if (!(m.sigma > 0.0))
        throw DomainError("sigma must be positive");
    const double c = m.c, s2 = m.sigma * m.sigma;
    ModelSpec spec;
    spec.a = [c](double) { return c; };
    spec.a_prime = [](double) { return 0.0; };
    spec.V = [s2](double x) { return 1.0 - 0.5 * s2 * x * x; };
    spec.b = [](double) { return 1.0; };
    spec.d = [s2](double x) { return 0.5 * s2 * x * x; };
    spec.beta = std::abs(c);
    spec.gamma = 0.0;
    spec.E_const = 1.0;
    spec.x0 = decay_threshold(s2);
    spec.M_upper = -c * c;
    spec.label = "hermite";
    return spec;
}

SigmaInput original_input(const HermiteModel& m)
{
    if (!(m.sigma > 0.0))
        throw DomainError("sigma must be positive");
    const double s = m.sigma, c = m.c;
    SigmaInput in;
    in.sigma = [s](double) { return s; };
    in.sigma_prime = [](double) { return 0.0; };
    in.sigma_second = [](double) { return 0.0; };
    in.a0 = [s, c](double) { return s * c; };
    in.a0_prime = [](double) { return 0.0; };
    in.V = [](double y) { return 1.0 - 0.5 * y * y; };
    in.b = [](double) { return 1.0; };
    in.d = [](double y) { return 0.5 * y * y; };
    in.E_const = 1.0;
    in.x0 = decay_threshold(1.0);
    return in;
}

ModelSpec r_picture_model(const HermiteModel& m)
{
    const double s2 = m.sigma * m.sigma;
    ModelSpec spec;
    spec.a = [](double) { return 0.0; };
    spec.a_prime = [](double) { return 0.0; };
    spec.V = [s2](double x) { return -x * x / (2.0 * s2); };
    spec.E_const = 1.0;
    spec.x0 = 2.0 * s2;
    spec.label = "hermite-R";
    return spec;
}

} // namespace fkq::hermite
