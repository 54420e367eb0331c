#include <doctest.h>

#include "hjblab/linear_parabolic.hpp"

#include <cmath>
#include <random>

using namespace hjblab;

namespace {

Grid torus1(std::size_t nx, std::size_t nt, double T = 1.0)
{
    return Grid::build(DomainKind::torus, 1, {{0.0, 1.0}}, {nx}, T, nt);
}

Field constant(const Grid& g, double v, std::size_t arity = 1) { return Field(g, arity, v); }

double max_abs(const Field& f)
{
    double m = 0.0;
    for (double v : f.values())
        m = std::max(m, std::abs(v));
    return m;
}

}  // namespace

TEST_CASE("zero drift and unit cost give T - s exactly")
{
    for (std::size_t nx : {2u, 3u, 16u}) {
        const Grid g = torus1(nx, 8);
        const Field u = solve_frozen(constant(g, 0.0), constant(g, 1.0), BoundaryCondition::periodic());
        for (std::size_t n = 0; n <= g.nt(); ++n)
            for (std::size_t i = 0; i < nx; ++i)
                CHECK(u.at(n, i) == doctest::Approx(1.0 - g.time(n)).epsilon(1e-13));
    }
    const Grid g2 = Grid::build(DomainKind::torus, 2, {{0, 1}, {0, 2}}, {5, 4}, 2.0, 4);
    const Field u2 = solve_frozen(constant(g2, 0.3, 2), constant(g2, 1.0), BoundaryCondition::periodic());
    for (std::size_t node = 0; node < g2.space_points(); ++node)
        CHECK(u2.at(0, node) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("box with exact data reproduces the quadratic closed forms")
{
    const double T = 1.0;
    const Grid g = Grid::build(DomainKind::box, 1, {{-6.0, 6.0}}, {241}, T, 512);
    Field cost(g);
    for (std::size_t n = 0; n <= g.nt(); ++n)
        for (std::size_t i = 0; i < g.nx(); ++i)
            cost.at(n, i) = g.coord(0, i) * g.coord(0, i);

    ParabolicScheme scheme;
    scheme.advection = Advection::central;
    const Field u0 = solve_frozen(constant(g, 0.0), cost, named_boundary("counterexample_value", T), scheme);
    const std::size_t mid = 120;
    CHECK(g.coord(0, mid) == doctest::Approx(0.0));
    CHECK(u0.at(0, mid) == doctest::Approx(counterexample_value(T, 0.0, 0.0)).epsilon(5e-3));

    const Field u1 = solve_frozen(constant(g, 1.0), cost, named_boundary("counterexample_mollified", T), scheme);
    CHECK(u1.at(0, mid) == doctest::Approx(4.0 / 3.0).epsilon(5e-3));
    const Field up = solve_frozen(constant(g, 1.0), cost, named_boundary("counterexample_mollified", T));
    CHECK(up.at(0, mid) == doctest::Approx(4.0 / 3.0).epsilon(2e-2));
}

TEST_CASE("solver output has near-zero residual")
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const std::vector<Grid> grids{
        torus1(2, 6), torus1(3, 6), torus1(17, 10),
        Grid::build(DomainKind::box, 1, {{-1, 1}}, {9}, 1.0, 7),
        Grid::build(DomainKind::torus, 2, {{0, 1}, {0, 1}}, {6, 5}, 1.0, 5),
        Grid::build(DomainKind::box, 2, {{0, 1}, {0, 1}}, {6, 7}, 0.5, 5),
    };
    for (const Grid& g : grids)
        for (auto ts : {TimeStepping::implicit_euler, TimeStepping::crank_nicolson})
            for (auto adv : {Advection::upwind, Advection::central}) {
                Field b(g, static_cast<std::size_t>(g.dim()));
                Field f(g);
                for (double& v : b.values())
                    v = 3.0 * U(rng);
                for (double& v : f.values())
                    v = U(rng);
                const ParabolicScheme scheme{ts, adv};
                const Field u = solve_frozen(b, f, BoundaryCondition::natural(g), scheme);
                CHECK(max_abs(pde_residual(u, b, f, scheme)) < 1e-10);
                for (std::size_t node = 0; node < g.space_points(); ++node)
                    CHECK(u.at(g.nt(), node) == 0.0);
            }
}

TEST_CASE("residual of zero field is the cost")
{
    const Grid g = torus1(8, 4);
    const Field r = pde_residual(constant(g, 0.0), constant(g, 0.0), constant(g, 1.0));
    for (std::size_t n = 0; n < g.nt(); ++n)
        for (std::size_t i = 0; i < 8; ++i)
            CHECK(r.at(n, i) == 1.0);
}

TEST_CASE("discrete comparison principle on random ordered pairs")
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::size_t violations = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Grid g = trial % 2 ? torus1(12, 9, 0.7) : Grid::build(DomainKind::box, 1, {{-2, 2}}, {13}, 1.0, 8);
        Field b(g, 1), f1(g), f2(g);
        for (double& v : b.values())
            v = 5.0 * U(rng);
        for (std::size_t k = 0; k < f1.size(); ++k) {
            f1.values()[k] = U(rng);
            f2.values()[k] = f1.values()[k] + std::abs(U(rng));
        }
        const auto bc = BoundaryCondition::natural(g);
        const Field u1 = solve_frozen(b, f1, bc);
        const Field u2 = solve_frozen(b, f2, bc);
        for (std::size_t k = 0; k < u1.size(); ++k)
            if (u1.values()[k] > u2.values()[k] + 1e-12)
                ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("linearity and boundedness")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const Grid g = torus1(20, 16);
    Field b(g, 1), f1(g), f2(g);
    for (std::size_t k = 0; k < f1.size(); ++k) {
        b.values()[k] = 2.0 * U(rng);
        f1.values()[k] = U(rng);
        f2.values()[k] = U(rng);
    }
    const auto bc = BoundaryCondition::periodic();
    const Field sum = solve_frozen(b, f1 + f2, bc);
    const Field parts = solve_frozen(b, f1, bc) + solve_frozen(b, f2, bc);
    CHECK(max_abs(sum - parts) < 1e-12);

    const Field u = solve_frozen(b, f1, bc);
    const double fmax = max_abs(f1);
    for (std::size_t n = 0; n <= g.nt(); ++n)
        for (std::size_t i = 0; i < g.nx(); ++i)
            CHECK(std::abs(u.at(n, i)) <= (g.T() - g.time(n)) * fmax + 1e-12);
}

TEST_CASE("monotonicity flag")
{
    const Grid g = torus1(10, 4);
    CHECK(scheme_is_monotone(constant(g, 1e6), ParabolicScheme{}));
    CHECK_FALSE(scheme_is_monotone(constant(g, 1e6), ParabolicScheme{TimeStepping::implicit_euler, Advection::central}));
    CHECK(scheme_is_monotone(constant(g, 0.5), ParabolicScheme{TimeStepping::implicit_euler, Advection::central}));
}

TEST_CASE("boundary kinds must match the domain")
{
    const Grid t = torus1(4, 2);
    const Grid b = Grid::build(DomainKind::box, 1, {{0, 1}}, {4}, 1.0, 2);
    CHECK_THROWS_AS(solve_frozen(constant(t, 0), constant(t, 0), named_boundary("zero", 1.0)), std::invalid_argument);
    CHECK_THROWS_AS(solve_frozen(constant(b, 0), constant(b, 0), BoundaryCondition::periodic()),
                    std::invalid_argument);
    CHECK_THROWS_AS(named_boundary("nope", 1.0), std::invalid_argument);
}

TEST_CASE("observed orders on the smooth baseline")
{
    const OracleContext ctx{1, 1.0};
    const ParamMap params{{"beta", "0.5"}};
    ClosedFormProblem prob;
    prob.oracle = make_oracle("smooth_baseline", params, ctx);
    prob.exact = [=](double t, const Point& x) { return smooth_baseline_exact(params, ctx, t, x); };

    auto ladder_space = [](std::initializer_list<std::size_t> nxs, std::size_t nt) {
        std::vector<Grid> out;
        for (auto nx : nxs)
            out.push_back(torus1(nx, nt));
        return out;
    };
    auto ladder_time = [](std::size_t nx, std::initializer_list<std::size_t> nts) {
        std::vector<Grid> out;
        for (auto nt : nts)
            out.push_back(torus1(nx, nt));
        return out;
    };

    const ParabolicScheme central{TimeStepping::implicit_euler, Advection::central};
    const OrderReport c = convergence_order(prob, ladder_space({32, 64, 128}, 16384), ladder_time(512, {16, 32, 64}), central);
    CHECK(c.space_order == doctest::Approx(2.0).epsilon(0.125));
    CHECK(c.time_order == doctest::Approx(1.0).epsilon(0.25));

    const ParabolicScheme upwind{};
    const OrderReport u = convergence_order(prob, ladder_space({128, 256, 512}, 16384), ladder_time(1024, {16, 32, 64}), upwind);
    CHECK(u.space_order == doctest::Approx(1.0).epsilon(0.25));
    CHECK(u.time_order == doctest::Approx(1.0).epsilon(0.25));

    CHECK_THROWS_AS(convergence_order(prob, ladder_space({8, 16}, 8), ladder_time(8, {8, 16, 32}), upwind),
                    std::invalid_argument);
}

TEST_CASE("constant cost problem skips the order fit")
{
    const OracleContext ctx{1, 1.0};
    ClosedFormProblem prob;
    prob.oracle = make_oracle("constant_drift", {{"c", "0"}, {"f0", "1"}}, ctx);
    prob.exact = [](double t, const Point&) { return 1.0 - t; };
    std::vector<Grid> s{torus1(8, 4), torus1(16, 4), torus1(32, 4)};
    std::vector<Grid> t{torus1(8, 4), torus1(8, 8), torus1(8, 16)};
    const OrderReport r = convergence_order(prob, s, t, ParabolicScheme{});
    CHECK(r.skipped);
}
