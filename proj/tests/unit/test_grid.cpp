#include <doctest.h>

#include "hjblab/grid.hpp"
#include "hjblab/io.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

using namespace hjblab;

TEST_CASE("grid construction")
{
    const Grid t = Grid::build(DomainKind::torus, 1, {{0.0, 1.0}}, {8}, 1.0, 4);
    CHECK(t.dx() == 0.125);
    CHECK(t.dt() == 0.25);
    CHECK(t.coord(0, 0) == 0.0625);

    const Grid b = Grid::build(DomainKind::box, 1, {{-6.0, 6.0}}, {241}, 1.0, 512);
    CHECK(b.dx() == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(b.dt() == doctest::Approx(0.001953125).epsilon(1e-15));
    CHECK(b.coord(0, 0) == -6.0);
    CHECK(b.coord(0, 240) == 6.0);
    CHECK(b.dt() * 512 == doctest::Approx(1.0).epsilon(1e-15));

    CHECK_THROWS_AS(Grid::build(DomainKind::torus, 1, {{0, 1}}, {0}, 1.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(Grid::build(DomainKind::torus, 1, {{0, 1}}, {1}, 1.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(Grid::build(DomainKind::torus, 1, {{0, 1}}, {4}, 1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(Grid::build(DomainKind::torus, 1, {{0, 1}}, {4}, 0.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(Grid::build(DomainKind::box, 1, {{1, 1}}, {4}, 1.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(Grid::build(DomainKind::box, 3, {{0, 1}, {0, 1}, {0, 1}}, {4, 4, 4}, 1.0, 4),
                    std::invalid_argument);
}

TEST_CASE("lp norms")
{
    const Grid t = Grid::build(DomainKind::torus, 1, {{0.0, 1.0}}, {8}, 1.0, 4);
    for (double p : {1.0, 2.0, 3.5, std::numeric_limits<double>::infinity()})
        CHECK(lp_norm(Field(t, 1, 1.0), p) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(lp_norm(Field(t, 1, 1.0), 0.5), std::invalid_argument);

    const Grid t2 = Grid::build(DomainKind::torus, 2, {{0.0, 2.0}, {0.0, 3.0}}, {5, 7}, 0.5, 3);
    const double m = t2.measure();
    CHECK(m == doctest::Approx(3.0));
    for (double p : {1.0, 2.0, 4.0})
        CHECK(lp_norm(Field(t2, 1, 2.5), p) == doctest::Approx(2.5 * std::pow(m, 1.0 / p)).epsilon(1e-12));

    const Grid b = Grid::build(DomainKind::box, 1, {{0.0, 1.0}}, {401}, 1.0, 2);
    Field f(b);
    for (std::size_t n = 0; n <= b.nt(); ++n)
        for (std::size_t i = 0; i < b.nx(); ++i)
            f.at(n, i) = b.coord(0, i);
    CHECK(lp_norm(f, 2.0) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-5));
    CHECK(lp_norm(f, std::numeric_limits<double>::infinity()) == 1.0);
}

TEST_CASE("norm monotonicity")
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const Grid g = Grid::build(DomainKind::box, 2, {{0, 1}, {0, 1}}, {6, 5}, 1.0, 4);
    for (int trial = 0; trial < 20; ++trial) {
        Field f(g), h(g);
        for (std::size_t k = 0; k < f.size(); ++k) {
            f.values()[k] = U(rng);
            h.values()[k] = std::abs(f.values()[k]) + std::abs(U(rng));
        }
        for (double p : {1.0, 2.0, 6.0, std::numeric_limits<double>::infinity()})
            CHECK(lp_norm(f, p) <= lp_norm(h, p));
    }
}

TEST_CASE("gradients")
{
    const Grid b = Grid::build(DomainKind::box, 1, {{-1.0, 1.0}}, {11}, 1.0, 1);
    Field c(b, 1, 3.0);
    const Field gc = spatial_gradient(c);
    for (double v : gc.values())
        CHECK(v == 0.0);
    Field lin(b);
    for (std::size_t n = 0; n <= b.nt(); ++n)
        for (std::size_t i = 0; i < b.nx(); ++i)
            lin.at(n, i) = 2.0 * b.coord(0, i) + 1.0;
    const Field g = spatial_gradient(lin);
    for (std::size_t i = 1; i + 1 < b.nx(); ++i)
        CHECK(g.at(0, i) == doctest::Approx(2.0).epsilon(1e-12));

    const Grid b2 = Grid::build(DomainKind::box, 2, {{0, 1}, {0, 2}}, {7, 9}, 1.0, 1);
    Field aff(b2);
    for (std::size_t n = 0; n <= b2.nt(); ++n)
        for (std::size_t node = 0; node < b2.space_points(); ++node) {
            const Point x = b2.point(node);
            aff.at(n, node) = 0.5 * x[0] - 1.5 * x[1];
        }
    const Field g2 = spatial_gradient(aff);
    for (std::size_t node = 0; node < b2.space_points(); ++node) {
        if (b2.is_boundary(node))
            continue;
        CHECK(g2.at(0, node, 0) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(g2.at(0, node, 1) == doctest::Approx(-1.5).epsilon(1e-12));
    }

    auto sine_error = [](std::size_t nx) {
        const Grid t = Grid::build(DomainKind::torus, 1, {{0.0, 1.0}}, {nx}, 1.0, 1);
        Field s(t);
        for (std::size_t n = 0; n <= 1; ++n)
            for (std::size_t i = 0; i < nx; ++i)
                s.at(n, i) = std::sin(2.0 * std::numbers::pi * t.coord(0, i));
        const Field d = spatial_gradient(s);
        double err = 0.0;
        for (std::size_t i = 0; i < nx; ++i)
            err = std::max(err, std::abs(d.at(0, i) - 2.0 * std::numbers::pi * std::cos(2.0 * std::numbers::pi * t.coord(0, i))));
        return err;
    };
    const double ratio = sine_error(32) / sine_error(64);
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("upwind gradient follows the sign field")
{
    const Grid b = Grid::build(DomainKind::box, 1, {{0.0, 4.0}}, {5}, 1.0, 1);
    Field u(b), s(b, 1);
    for (std::size_t n = 0; n <= 1; ++n)
        for (std::size_t i = 0; i < 5; ++i) {
            const double x = b.coord(0, i);
            u.at(n, i) = x * x;
        }
    for (std::size_t i = 0; i < 5; ++i) {
        s.at(0, i) = 1.0;
        s.at(1, i) = -1.0;
    }
    const Field g = spatial_gradient(u, GradientScheme::upwind, &s);
    CHECK(g.at(0, 2) == doctest::Approx(5.0));  // (9 - 4) / 1
    CHECK(g.at(1, 2) == doctest::Approx(3.0));  // (4 - 1) / 1
    CHECK_THROWS(spatial_gradient(u, GradientScheme::upwind, nullptr));
}

TEST_CASE("holder seminorm")
{
    const Grid b = Grid::build(DomainKind::box, 1, {{0.0, 1.0}}, {101}, 1.0, 1);
    Field c(b, 1, 2.0), id(b), root(b);
    for (std::size_t n = 0; n <= 1; ++n)
        for (std::size_t i = 0; i < b.nx(); ++i) {
            id.at(n, i) = b.coord(0, i);
            root.at(n, i) = std::sqrt(b.coord(0, i));
        }
    CHECK(holder_seminorm(c, 0, 0.5) == 0.0);
    CHECK(holder_seminorm(id, 0, 1.0) == doctest::Approx(1.0));
    CHECK(holder_seminorm(root, 0, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(holder_seminorm(id, 0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(holder_seminorm(id, 0, 1.5), std::invalid_argument);
}

TEST_CASE("full-period shift changes nothing")
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    const Grid t = Grid::build(DomainKind::torus, 1, {{0.0, 1.0}}, {12}, 1.0, 3);
    Field f(t);
    for (double& v : f.values())
        v = U(rng);
    const Field r = roll(f, 12);
    CHECK(lp_norm(r, 2.0) == lp_norm(f, 2.0));
    const Field g1 = spatial_gradient(f), g2 = spatial_gradient(r);
    for (std::size_t k = 0; k < g1.size(); ++k)
        CHECK(g1.values()[k] == g2.values()[k]);
    const Field one = roll(f, 1);
    CHECK(one.at(0, 1) == f.at(0, 0));
}

TEST_CASE("interpolation and lookup")
{
    const Grid t = Grid::build(DomainKind::torus, 1, {{0.0, 1.0}}, {4}, 1.0, 2);
    CHECK(t.nearest_node(Point{0.99, 0.0}) == 3);
    CHECK(t.nearest_node(Point{1.05, 0.0}) == 0);
    Field f(t);
    for (std::size_t n = 0; n <= 2; ++n)
        for (std::size_t i = 0; i < 4; ++i)
            f.at(n, i) = static_cast<double>(i) + 10.0 * n;
    CHECK(f.interpolate(0.0, Point{0.125, 0.0}) == doctest::Approx(0.0));
    CHECK(f.interpolate(0.25, Point{0.25, 0.0}) == doctest::Approx(5.5));
}

TEST_CASE("csv and json round trip")
{
    const Grid b = Grid::build(DomainKind::box, 2, {{-1, 1}, {0, 2}}, {4, 3}, 1.0, 2);
    Field f(b);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (double& v : f.values())
        v = U(rng);
    std::ostringstream os;
    write_field_csv(os, f);
    CHECK(os.str().rfind("t,x,y,value\n", 0) == 0);

    const auto dir = std::filesystem::temp_directory_path() / "hjblab_grid_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "f.csv").string();
    write_field_csv(path, f);
    const Field back = read_field_csv(path, DomainKind::box);
    REQUIRE(back.size() == f.size());
    for (std::size_t k = 0; k < f.size(); ++k)
        CHECK(back.values()[k] == f.values()[k]);

    const Field j = field_from_json(field_to_json(f));
    for (std::size_t k = 0; k < f.size(); ++k)
        CHECK(j.values()[k] == f.values()[k]);
    std::filesystem::remove_all(dir);
}

TEST_CASE("non-finite values are rejected")
{
    const Grid t = Grid::build(DomainKind::torus, 1, {{0.0, 1.0}}, {4}, 1.0, 2);
    Field f(t);
    f.at(1, 2) = std::nan("");
    CHECK_FALSE(f.all_finite());
    CHECK_THROWS_AS(f.require_finite("test"), std::logic_error);
}
