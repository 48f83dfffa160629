#include "fkq/branching.hpp"
#include "fkq/errors.hpp"
#include "fkq/hermite.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

using namespace fkq;
using Catch::Approx;

namespace {

ModelSpec flat(double b, double d)
{
    ModelSpec s;
    s.a = s.a_prime = [](double) { return 0.0; };
    s.V = [b, d](double) { return b - d; };
    s.b = [b](double) { return b; };
    s.d = [d](double) { return d; };
    return s;
}

const KernelEvaluator& hermite_ev()
{
    static KernelEvaluator ev(std::make_shared<SpectralBasis>(
        solve_eigen(reduce(hermite::reduced_model({1.0, 0.0}), Grid(12.0, 12001)), 32)));
    return ev;
}

bool within(const McEstimate& e, double target, double k = 3.0)
{
    return std::abs(e.mean - target) <= k * e.stderr_;
}

} // namespace

TEST_CASE("no branching: a single Brownian path", "[branching]")
{
    const auto s = flat(0.0, 0.0);
    std::vector<double> ends;
    for (std::uint64_t r = 0; r < 4000; ++r) {
        Rng rng(3, r);
        const auto tree = simulate_population(s, 0.0, 1.0, 1e-2, rng);
        REQUIRE(tree.individuals.size() == 1);
        REQUIRE(tree.N_T() == 1);
        ends.push_back(tree.final_traits[0]);
    }
    const auto e = mean_stderr(ends);
    double v = 0.0;
    for (double x : ends)
        v += (x - e.mean) * (x - e.mean);
    v /= static_cast<double>(ends.size() - 1);
    // Var of the sample variance for N(0,1) is 2/(n-1).
    CHECK(v == Approx(1.0).margin(3 * std::sqrt(2.0 / 3999)));
}

TEST_CASE("Yule process mean", "[branching]")
{
    const auto e = estimate_linear_functional(flat(1.0, 0.0), [](double) { return 1.0; }, 0.0, 2.0, 1e-2, 10000);
    INFO(e.mean << " +- " << e.stderr_);
    CHECK(within(e, std::exp(2.0)));
    CHECK(e.extinct_fraction == 0.0);
}

TEST_CASE("pure death survival", "[branching]")
{
    // P(alive at T) = e^{-d T}.
    const auto e = estimate_linear_functional(flat(0.0, 0.5), [](double) { return 1.0; }, 0.0, 2.0, 1e-2, 10000);
    CHECK(within(e, std::exp(-1.0)));
}

TEST_CASE("genealogy bookkeeping", "[branching]")
{
    const auto spec = hermite::reduced_model({1.0, 0.0});
    Rng rng(12, 0);
    const auto tree = simulate_population(spec, 0.0, 2.0, 1e-2, rng);
    REQUIRE(tree.steps == 200);
    REQUIRE(tree.live_counts.size() == 201);
    for (std::int64_t s = 0; s <= tree.steps; s += 10)
        CHECK(tree.reconstruct_alive(s) == tree.live_counts[static_cast<std::size_t>(s)]);
    for (std::size_t k = 0; k < tree.N_T(); ++k) {
        const auto path = tree.ancestral_path(tree.alive_ids[k]);
        CHECK(path.size() == 201);
        CHECK(path.front() == 0.0);
        CHECK(path.back() == tree.final_traits[k]);
    }
    for (const auto& ind : tree.individuals)
        if (ind.parent) {
            const auto& par = tree.individuals[static_cast<std::size_t>(*ind.parent)];
            CHECK(par.birth_step < ind.birth_step);
            CHECK(par.trajectory[static_cast<std::size_t>(ind.birth_step - par.birth_step)] == ind.trajectory[0]);
        }
}

TEST_CASE("simulator preconditions", "[branching]")
{
    const auto spec = hermite::reduced_model({1.0, 0.0});
    Rng rng(1, 0);
    CHECK_THROWS_AS(simulate_population(spec, 0.0, 1.0, 2e-2, rng), DomainError);
    CHECK_THROWS_AS(simulate_population(spec, 0.0, 1.005, 1e-2, rng), DomainError);
    CHECK_THROWS_AS(estimate_linear_functional(spec, [](double) { return 1.0; }, 0.0, 1.0, 1e-2, 50), DomainError);
    const auto capped = simulate_population(flat(1.0, 0.0), 0.0, 10.0, 1e-2, rng, {1000, false});
    CHECK(capped.truncated);
}

TEST_CASE("many-to-one against the kernel", "[branching]")
{
    const auto& ev = hermite_ev();
    const auto spec = hermite::reduced_model({1.0, 0.0});
    const auto& g = ev.basis().grid;
    const std::vector<std::function<double(double)>> phis{
        [](double) { return 1.0; }, [](double x) { return x; }, [](double x) { return x * x; }};
    const auto est = estimate_linear_functionals(spec, phis, 0.0, 3.0, 1e-2, 20000);
    CHECK(within(est[0], ev.mass(3.0, 0.0)));
    CHECK(within(est[1], 0.0));
    CHECK(within(est[2], ev.apply_Pt(g.sample([](double x) { return x * x; }), 3.0, 0.0)));
}

TEST_CASE("Feynman-Kac path estimator", "[branching]")
{
    SECTION("zero potential, unit test function")
    {
        const auto e = feynman_kac_mc(flat(0.0, 0.0), [](double) { return 1.0; }, 0.0, 1.0, 1e-2, 200);
        CHECK(e.mean == 1.0);
        CHECK(e.stderr_ == 0.0);
    }
    SECTION("mass at T = 2 and agreement with the branching estimator")
    {
        const auto& ev = hermite_ev();
        const auto spec = hermite::reduced_model({1.0, 0.0});
        const auto fk = feynman_kac_mc(spec, [](double) { return 1.0; }, 0.0, 2.0, 1e-2, 20000);
        CHECK(within(fk, ev.mass(2.0, 0.0)));
        const auto left = feynman_kac_mc(spec, [](double) { return 1.0; }, 0.0, 2.0, 1e-2, 20000, {},
                                         PathQuadrature::LeftEndpoint);
        CHECK(within(left, ev.mass(2.0, 0.0), 4.0));
        const auto br = estimate_linear_functional(spec, [](double) { return 1.0; }, 0.0, 2.0, 1e-2, 20000,
                                                   {.seed = 99});
        CHECK(std::abs(fk.mean - br.mean) <= 3 * std::hypot(fk.stderr_, br.stderr_));
    }
}

TEST_CASE("Monte Carlo is deterministic for a fixed seed", "[branching]")
{
    const auto spec = hermite::reduced_model({1.0, 0.0});
    const auto a = estimate_linear_functional(spec, [](double x) { return x * x; }, 0.3, 1.0, 1e-2, 500, {.seed = 5});
    const auto b = estimate_linear_functional(spec, [](double x) { return x * x; }, 0.3, 1.0, 1e-2, 500,
                                              {.seed = 5, .threads = 3});
    CHECK(a.mean == b.mean);
    CHECK(a.stderr_ == b.stderr_);
}

TEST_CASE("ratio limit estimator", "[branching]")
{
    const auto spec = hermite::reduced_model({1.0, 0.0});
    const auto e = ratio_limit_mc(spec, [](double) { return 1.0; }, 0.0, 1.0, 1e-2, 500);
    CHECK(e.mean == Approx(1.0));
    CHECK(e.used + static_cast<std::size_t>(e.extinct_fraction * 500 + 0.5) == 500);
}

TEST_CASE("spines", "[branching]")
{
    SECTION("without branching the spine is the path")
    {
        const auto sp = sample_spines(flat(0.0, 0.0), 0.5, 1.0, 1e-2, 100);
        REQUIRE(sp.size() == 100);
        for (const auto& s : sp) {
            CHECK(s.weight == 1.0);
            CHECK(s.traits.front() == 0.5);
            CHECK(s.times.back() == Approx(1.0));
        }
    }
    SECTION("endpoint law is p(T, x0, .) normalized, mean weight is the mass")
    {
        const auto& ev = hermite_ev();
        const auto& g = ev.basis().grid;
        const auto spec = hermite::reduced_model({1.0, 0.0});
        const std::size_t reps = 20000;
        const auto sp = sample_spines(spec, 0.0, 2.0, 1e-2, reps);
        std::vector<double> w(reps, 0.0);
        for (std::size_t i = 0; i < sp.size(); ++i)
            w[i] = sp[i].weight;
        // Extinct trees contribute weight 0.
        const auto we = mean_stderr(w);
        CHECK(std::abs(we.mean - ev.mass(2.0, 0.0)) <= 3 * we.stderr_);

        std::vector<double> dens(g.n());
        for (std::size_t i = 0; i < g.n(); ++i)
            dens[i] = ev.p(2.0, 0.0, g[i]);
        const double Z = g.integrate(dens);
        const int B = 16;
        std::vector<double> emp(B + 2, 0.0), pred(B + 2, 0.0);
        auto bin = [&](double x) { return x < -4 ? 0 : x >= 4 ? B + 1 : 1 + std::min(B - 1, int((x + 4) / 0.5)); };
        double sw = 0.0;
        for (const auto& s : sp) {
            emp[static_cast<std::size_t>(bin(s.traits.back()))] += s.weight;
            sw += s.weight;
        }
        for (std::size_t i = 0; i < g.n(); ++i)
            pred[static_cast<std::size_t>(bin(g[i]))] += dens[i] * g.h() / Z;
        double tv = 0.0;
        for (int k = 0; k < B + 2; ++k)
            tv += std::abs(emp[static_cast<std::size_t>(k)] / sw - pred[static_cast<std::size_t>(k)]);
        CHECK(0.5 * tv <= 0.05);
    }
}

TEST_CASE("reversed-spine kernel identity chain", "[branching]")
{
    const auto& ev = hermite_ev();
    for (auto [u, r, z, y] : {std::array{0.5, 0.7, 0.3, -0.2}, std::array{0.3, 0.4, -1.0, 0.8}}) {
        const auto ch = reversal_identity_chain(ev, 2.0, u, r, z, y);
        CHECK(ch.line1 == Approx(ch.q).epsilon(1e-8));
        CHECK(ch.line2 == Approx(ch.q).epsilon(1e-8));
        CHECK(ch.line3 == Approx(ch.q).epsilon(1e-8));
        CHECK(ch.line4 == Approx(ch.q).epsilon(1e-8));
    }
    CHECK_THROWS_AS(reversal_identity_chain(ev, 1.0, 0.6, 0.6, 0.0, 0.0), DomainError);
}
