#include <doctest.h>

#include "hjblab/mollifier.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace hjblab;

TEST_CASE("kernel support, scaling and mass")
{
    for (int dim : {1, 2})
        for (double eps : {0.4, 0.1, 0.025}) {
            const MollifierKernel k(eps, dim);
            CHECK(k.value(eps, Point{}) == 0.0);
            CHECK(k.value(0.6 * eps, Point{0.8 * eps, 0.0}) == 0.0);
            if (dim == 2)
                CHECK(k.value(0.0, Point{0.0, eps}) == 0.0);
            CHECK(k.value(0.0, Point{}) == doctest::Approx(std::pow(eps, -(dim + 1)) * k.unit_value(0.0, Point{})));
            CHECK(k.value(0.3 * eps, Point{0.2 * eps, 0.0}) > 0.0);
            CHECK(std::abs(k.lattice_integral(dim == 1 ? 200 : 60) - 1.0) <= 1e-8);
        }
    CHECK_THROWS_AS(MollifierKernel(0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(MollifierKernel(-1.0, 1), std::invalid_argument);
}

TEST_CASE("stencils carry unit mass")
{
    const MollifierKernel k(0.1, 1);
    const QuadratureStencil c = cell_stencil(k, 8);
    double total = 0.0;
    for (double w : c.weight) {
        CHECK(w >= 0.0);
        total += w;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    for (const Point& y : c.dx)
        CHECK(y[0] != 0.0);
}

TEST_CASE("mollifying fields")
{
    const double eps = 0.1;
    const Grid t = Grid::build(DomainKind::torus, 1, {{-1.0, 1.0}}, {80}, 1.0, 80);
    const MollifierKernel k(eps, 1);
    const Field m = mollify_field(Field(t, 1, 2.5), k);
    const TimeWindow w = TimeWindow::between(t, eps, 1.0 - eps);
    for (std::size_t n = w.first; n <= w.last; ++n)
        for (std::size_t i = 0; i < t.nx(); ++i)
            CHECK(m.at(n, i) == doctest::Approx(2.5).epsilon(1e-12));
    // zero extension in time lowers the terminal level
    CHECK(m.at(t.nt(), 5) < 2.5);

    // sign(x) mollified at the jump: (1 + sign) / 2 = 1_{x >= 0} gives 1/2
    const auto step = make_oracle("step_drift", {{"c", "1"}, {"jump", "0"}}, {1, 1.0});
    const auto ms = mollify_oracle(step, k, t);
    CHECK(0.5 * (1.0 + ms.raw(0.5, Point{0.0, 0.0}, Action{}).drift[0]) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("mollified counterexample drift washes out the null set")
{
    const auto o = make_oracle("counterexample", {}, {1, 1.0});
    const Grid box = Grid::build(DomainKind::box, 1, {{-6.0, 6.0}}, {241}, 1.0, 64);
    for (double eps : {0.2, 0.05}) {
        const auto m = mollify_oracle(o, MollifierKernel(eps, 1), box);
        for (double a : {0.5, 0.0, -1.25}) {
            const auto c = m.raw(0.5, Point{a, 0}, Action{a, 0});
            CHECK(c.drift[0] == doctest::Approx(1.0).epsilon(1e-14));
        }
    }
}

TEST_CASE("coefficient ladders")
{
    const OracleContext ctx{1, 1.0};
    const Grid t = Grid::build(DomainKind::torus, 1, {{0.0, 1.0}}, {64}, 1.0, 64);
    const std::vector<double> eps{0.2, 0.1, 0.05};

    const auto sb = make_oracle("smooth_baseline", {}, ctx);
    const LadderReport rs = coefficient_ladder(sb, Action{}, t, eps);
    REQUIRE(rs.rungs.size() == 3);
    const double r1 = rs.rungs[0].cost_distance_interior / rs.rungs[1].cost_distance_interior;
    const double r2 = rs.rungs[1].cost_distance_interior / rs.rungs[2].cost_distance_interior;
    CHECK(r1 == doctest::Approx(4.0).epsilon(0.15));
    CHECK(r2 == doctest::Approx(4.0).epsilon(0.15));

    const auto sd = make_oracle("step_drift", {{"c", "1"}, {"jump", "0.5"}}, ctx);
    const LadderReport rd = coefficient_ladder(sd, Action{0.0, 0}, t, eps);
    for (std::size_t i = 1; i < rd.rungs.size(); ++i)
        CHECK(rd.rungs[i].drift_distance < rd.rungs[i - 1].drift_distance);

    const auto cd = make_oracle("constant_drift", {{"c", "1"}, {"f0", "2"}}, ctx);
    const LadderReport rc = coefficient_ladder(cd, Action{}, t, eps);
    for (const auto& r : rc.rungs) {
        CHECK(r.drift_distance_interior <= 1e-8);
        CHECK(r.cost_distance_interior <= 1e-8);
    }

    CHECK_THROWS_AS(coefficient_ladder(cd, Action{}, t, {0.05, 0.1}), std::invalid_argument);
    CHECK_THROWS_AS(coefficient_ladder(cd, Action{}, t, {0.1, 0.001}), std::invalid_argument);
}

TEST_CASE("domination transfer and monotone approximation")
{
    const OracleContext ctx{1, 1.0};
    const Grid t = Grid::build(DomainKind::torus, 1, {{-1.0, 1.0}}, {64}, 1.0, 64);
    const std::vector<double> eps{0.25, 0.125, 0.0625};
    for (const char* name : {"step_drift", "checkerboard", "bang_bang", "smooth_baseline", "constant_drift"}) {
        const auto o = make_oracle(name, {}, ctx);
        const Action a = o.default_actions()[0];
        const LadderReport r = coefficient_ladder(o, a, t, eps);
        double phi_sup = 0.0;
        for (std::size_t node = 0; node < t.space_points(); ++node)
            for (std::size_t n = 0; n <= t.nt(); ++n)
                phi_sup = std::max(phi_sup, o.bound(t.time(n), t.point(node)));
        for (std::size_t i = 0; i < r.rungs.size(); ++i) {
            CHECK_MESSAGE(r.rungs[i].drift_sup + r.rungs[i].cost_sup <= phi_sup + 1e-12, name);
            if (i > 0) {
                CHECK_MESSAGE(r.rungs[i].drift_distance <= r.rungs[i - 1].drift_distance + 1e-10, name);
                CHECK_MESSAGE(r.rungs[i].cost_distance <= r.rungs[i - 1].cost_distance + 1e-10, name);
            }
        }

        // |g_eps| <= zeta_eps * Phi on the time interior
        const MollifierKernel k(eps[1], 1);
        const auto m = mollify_oracle(o, k, t);
        const CoefficientOracle phi_as_cost(
            "phi", 1, {}, [&o](double s, const Point& x, const Action&) { return Coefficients{{}, o.bound(s, x)}; },
            [&o](double s, const Point& x) { return o.bound(s, x); }, {}, ActionSet::scalars({0.0}), 4.0);
        const auto mphi = mollify_oracle(phi_as_cost, k, t);
        for (double s : {0.2, 0.5, 0.8})
            for (double x : {-0.9, -0.3, 0.0, 0.41}) {
                const auto c = m.raw(s, Point{x, 0}, a);
                CHECK(std::abs(c.drift[0]) + std::abs(c.cost) <= mphi.raw(s, Point{x, 0}, Action{}).cost + 1e-12);
            }
    }
}

TEST_CASE("mollified fields have bounded difference quotients")
{
    const Grid t = Grid::build(DomainKind::torus, 1, {{0.0, 1.0}}, {200}, 1.0, 50);
    Field sq(t);
    for (std::size_t n = 0; n <= t.nt(); ++n)
        for (std::size_t i = 0; i < t.nx(); ++i)
            sq.at(n, i) = t.coord(0, i) < 0.5 ? 1.0 : -1.0;
    for (double eps : {0.1, 0.05}) {
        const MollifierKernel k(eps, 1);
        const Field m = mollify_field(sq, k);
        const Field g = spatial_gradient(m);
        double gmax = 0.0;
        for (double v : g.values())
            gmax = std::max(gmax, std::abs(v));
        // int |d_x zeta| = 2 int zeta(t, 0) dt for a radial profile that decreases along every line
        double C = 0.0;
        const int m_steps = 20000;
        for (int j = 0; j < m_steps; ++j)
            C += 2.0 * k.unit_value(-1.0 + (j + 0.5) * 2.0 / m_steps, Point{}) * 2.0 / m_steps;
        CHECK(gmax <= C / eps * 1.0 * 1.05);
    }
}
