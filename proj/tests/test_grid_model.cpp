#include "fkq/errors.hpp"
#include "fkq/grid.hpp"
#include "fkq/hermite.hpp"
#include "fkq/model.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace fkq;
using Catch::Approx;

namespace {

ModelSpec drift_potential(RealFn a, RealFn ap, RealFn V)
{
    ModelSpec s;
    s.a = std::move(a);
    s.a_prime = std::move(ap);
    s.V = std::move(V);
    return s;
}

} // namespace

TEST_CASE("grid has an exact zero node and symmetric ends", "[grid]")
{
    Grid g(12.0, 12001);
    CHECK(g.h() == Approx(2e-3));
    CHECK(g[6000] == 0.0);
    CHECK(g[0] == -12.0);
    CHECK(g[12000] == 12.0);
    CHECK(g.nearest(0.0011) == 6001);
    CHECK(g.nearest(100.0) == 12000);
    CHECK_THROWS_AS(Grid(12.0, 100), DomainError);
}

TEST_CASE("trapezoid and derivative are accurate on smooth functions", "[grid]")
{
    Grid g(8.0, 4001);
    const auto f = g.sample([](double x) { return std::exp(-x * x); });
    CHECK(g.integrate(f) == Approx(std::sqrt(std::numbers::pi)).epsilon(1e-12));
    const auto df = g.derivative(g.sample([](double x) { return std::sin(x); }));
    double worst = 0.0;
    for (std::size_t i = 0; i < g.n(); ++i)
        worst = std::max(worst, std::abs(df[i] - std::cos(g[i])));
    CHECK(worst < 1e-9);
    const auto c = g.cumulative(g.sample([](double) { return 1.0; }));
    CHECK(c.back() == Approx(16.0));
}

TEST_CASE("stencil interpolation reproduces quintics and nodes", "[grid]")
{
    Grid g(2.0, 41);
    const auto f = g.sample([](double x) { return x * x * x * x * x - 2 * x * x + 1; });
    for (double x : {-1.93, -0.517, 0.0, 0.31, 1.999}) {
        const double exact = x * x * x * x * x - 2 * x * x + 1;
        CHECK(interpolate(g, f, x) == Approx(exact).margin(1e-12));
    }
    CHECK(interpolate(g, f, g[7]) == f[7]);
    CHECK_THROWS_AS(make_stencil(g, 2.5), DomainError);
}

TEST_CASE("ell integrates the drift", "[model]")
{
    auto zero = drift_potential([](double) { return 0.0; }, [](double) { return 0.0; }, [](double) { return 0.0; });
    CHECK(ell(zero, 5.0) == 0.0);
    auto constant = drift_potential([](double) { return 1.0; }, [](double) { return 0.0; }, [](double) { return 0.0; });
    CHECK(ell(constant, 2.0) == Approx(2.0).margin(1e-10));
    auto linear = drift_potential([](double x) { return x; }, [](double) { return 1.0; }, [](double) { return 0.0; });
    CHECK(ell(linear, 3.0) == Approx(4.5).margin(1e-10));
    CHECK(ell(linear, -3.0) == Approx(4.5).margin(1e-10));
}

TEST_CASE("reduce forms the Girsanov potential", "[model]")
{
    Grid g(6.0, 601);
    SECTION("zero drift leaves the potential unchanged")
    {
        auto s = drift_potential([](double) { return 0.0; }, [](double) { return 0.0; },
                                 [](double x) { return 1 - x * x / 2; });
        s.E_const = 1.0;
        s.x0 = 1 + std::sqrt(3.0);
        const auto r = reduce(s, g);
        for (std::size_t i = 0; i < g.n(); i += 37) {
            CHECK(r.tildeV[i] == Approx(1 - g[i] * g[i] / 2).margin(1e-14));
            CHECK(r.ell[i] == 0.0);
        }
    }
    SECTION("constant drift c = 1 shifts by -1/2")
    {
        const auto r = reduce(hermite::reduced_model({1.0, 1.0}), g);
        for (std::size_t i = 0; i < g.n(); i += 37)
            CHECK(r.tildeV[i] == Approx(0.5 - g[i] * g[i] / 2).margin(1e-12));
    }
    SECTION("linear drift with quadratic potential")
    {
        auto s = drift_potential([](double x) { return x; }, [](double) { return 1.0; },
                                 [](double x) { return -x * x; });
        s.beta = 6.0;
        s.gamma = 18.0;
        s.M_upper = 1.0;
        const auto r = reduce(s, g);
        for (std::size_t i = 0; i < g.n(); i += 37)
            CHECK(r.tildeV[i] == Approx(0.5 - 1.5 * g[i] * g[i]).margin(1e-12));
    }
}

TEST_CASE("assumption report for the reference model", "[model]")
{
    Grid g(12.0, 2401);
    const auto rep = validate_assumptions(hermite::reduced_model({1.0, 0.0}), g);
    CHECK(rep.all_pass());
    CHECK(rep.A_V == Approx(1.0));
}

TEST_CASE("an unbounded-above potential fails H2, H3 and H4", "[model]")
{
    Grid g(6.0, 601);
    auto s = drift_potential([](double) { return 0.0; }, [](double) { return 0.0; }, [](double x) { return x * x; });
    const auto rep = validate_assumptions(s, g);
    CHECK_FALSE(rep.get("H2").pass);
    CHECK_FALSE(rep.get("H3").pass);
    CHECK_FALSE(rep.get("H4").pass);
    CHECK_FALSE(rep.all_pass());
}

TEST_CASE("cubic drift violates the linear ell bound", "[model]")
{
    Grid g(4.0, 801);
    auto s = drift_potential([](double x) { return x * x * x; }, [](double x) { return 3 * x * x; },
                             [](double x) { return 1 - x * x / 2; });
    s.beta = 1.0;
    s.M_upper = 1e9;
    const auto rep = validate_assumptions(s, g);
    const auto& h = rep.get("H0.2");
    CHECK_FALSE(h.pass);
    CHECK(std::abs(h.worst_x) == Approx(4.0));
    CHECK(h.worst_excess == Approx(64.0 - 4.0).epsilon(1e-8));

    // First violating node agrees with the crossing of x^4/4 = |x|.
    Grid fine(4.0, 8001);
    double first = 0.0;
    for (std::size_t i = fine.nearest(0.0); i < fine.n(); ++i)
        if (ell(s, fine[i]) > std::abs(fine[i]) + 1e-9) {
            first = fine[i];
            break;
        }
    CHECK(first == Approx(std::cbrt(4.0)).margin(2e-3));
}

TEST_CASE("sigma reduction", "[model]")
{
    SECTION("unit sigma is the identity")
    {
        SigmaInput in;
        in.sigma = [](double) { return 1.0; };
        in.sigma_prime = in.sigma_second = [](double) { return 0.0; };
        in.a0 = [](double y) { return 0.3 * y; };
        in.a0_prime = [](double) { return 0.3; };
        in.V = [](double y) { return 1 - y * y; };
        const auto r = reduce_sigma(in, Grid(4.0, 401));
        for (double x : {-3.1, 0.0, 2.2}) {
            CHECK(r.G(x) == Approx(x).margin(1e-12));
            CHECK(r.spec.a(x) == Approx(0.3 * x).margin(1e-10));
            CHECK(r.spec.V(x) == Approx(1 - x * x).margin(1e-10));
        }
    }
    SECTION("constant sigma = 2")
    {
        SigmaInput in;
        in.sigma = [](double) { return 2.0; };
        in.sigma_prime = in.sigma_second = [](double) { return 0.0; };
        in.a0 = in.a0_prime = [](double) { return 0.0; };
        in.V = [](double y) { return -y * y; };
        const auto r = reduce_sigma(in, Grid(4.0, 401));
        CHECK(r.grid.hi() == Approx(2.0));
        for (double y : {-3.0, -0.4, 1.7}) {
            CHECK(r.G(y) == Approx(y / 2).margin(1e-12));
            CHECK(r.G_inv(r.G(y)) == Approx(y).margin(1e-10));
        }
        for (double x : {-1.5, 0.25, 1.9}) {
            CHECK(r.spec.a(x) == Approx(0.0).margin(1e-14));
            CHECK(r.spec.V(x) == Approx(-4 * x * x).margin(1e-9));
        }
    }
    SECTION("sigma = 1 + y^2 gives G = arctan and a = tan")
    {
        SigmaInput in;
        in.sigma = [](double y) { return 1 + y * y; };
        in.sigma_prime = [](double y) { return 2 * y; };
        in.sigma_second = [](double) { return 2.0; };
        in.a0 = in.a0_prime = [](double) { return 0.0; };
        in.V = [](double y) { return -y * y; };
        const auto r = reduce_sigma(in, Grid(3.0, 601));
        for (double y : {-2.9, -1.0, 0.5, 2.5})
            CHECK(r.G(y) == Approx(std::atan(y)).margin(1e-10));
        for (double x : {-1.2, -0.3, 0.6, 1.2}) {
            CHECK(r.G_inv(x) == Approx(std::tan(x)).margin(1e-9));
            CHECK(r.spec.a(x) == Approx(std::tan(x)).margin(1e-8));
            // a' = d/dx tan x = 1 + tan^2 x
            CHECK(r.spec.a_prime(x) == Approx(1 + std::tan(x) * std::tan(x)).margin(1e-7));
        }
    }
    SECTION("sign change of sigma is rejected")
    {
        SigmaInput in;
        in.sigma = [](double y) { return y; };
        in.sigma_prime = [](double) { return 1.0; };
        in.sigma_second = in.a0 = in.a0_prime = [](double) { return 0.0; };
        in.V = [](double) { return 0.0; };
        CHECK_THROWS_AS(reduce_sigma(in, Grid(1.0, 101)), DomainError);
    }
}
