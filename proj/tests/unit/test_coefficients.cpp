#include <doctest.h>

#include "hjblab/coefficients.hpp"
#include "hjblab/io.hpp"

#include <cstring>
#include <filesystem>

using namespace hjblab;

TEST_CASE("counterexample evaluation")
{
    const auto o = make_oracle("counterexample", {}, {1, 1.0});
    CHECK(eval_coeff(o, 0.2, Point{0.5, 0}, Action{0.5, 0}).drift[0] == 0.0);
    CHECK(eval_coeff(o, 0.2, Point{0.5, 0}, Action{0.3, 0}).drift[0] == 1.0);
    CHECK(eval_coeff(o, 0.2, Point{2.0, 0}, Action{0.3, 0}).cost == 4.0);
    CHECK_THROWS_AS(make_oracle("counterexample", {}, {2, 1.0}), std::invalid_argument);
}

TEST_CASE("evaluation is deterministic and checked")
{
    const OracleContext ctx{1, 1.0};
    for (const auto& entry : catalog()) {
        if (entry.name == "tabulated")
            continue;
        const auto o = make_oracle(entry.name, {}, ctx);
        const Action a = o.default_actions()[0];
        for (double x : {-0.7, 0.0, 0.31}) {
            const auto c1 = eval_coeff(o, 0.3, Point{x, 0}, a);
            const auto c2 = eval_coeff(o, 0.3, Point{x, 0}, a);
            CHECK(std::memcmp(&c1, &c2, sizeof c1) == 0);
        }
    }
    const auto bb = make_oracle("bang_bang", {}, ctx);
    CHECK_THROWS_AS(eval_coeff(bb, 0.0, Point{}, Action{2.0, 0}), std::out_of_range);
    CHECK_THROWS_AS(make_oracle("nope", {}, ctx), std::invalid_argument);
}

TEST_CASE("grid sampling")
{
    const OracleContext ctx{1, 1.0};
    const Grid t4 = Grid::build(DomainKind::torus, 1, {{0.0, 1.0}}, {4}, 1.0, 2);
    const auto cd = make_oracle("constant_drift", {{"c", "1"}}, ctx);
    auto [d, c] = sample_to_grid(cd, t4, Action{});
    for (double v : d.values())
        CHECK(v == 1.0);

    const Grid b = Grid::build(DomainKind::box, 1, {{-1.0, 1.0}}, {5}, 1.0, 1);
    const auto sd = make_oracle("step_drift", {{"c", "1"}}, ctx);
    auto [sdrift, scost] = sample_to_grid(sd, b, Action{0.0, 0});
    CHECK(sdrift.at(0, 2) == 1.0);
    CHECK(sdrift.at(0, 1) == -1.0);

    const auto cb = make_oracle("checkerboard", {{"kx", "1"}}, ctx);
    auto [cdrift, ccost] = sample_to_grid(cb, t4, Action{1.0, 0});
    CHECK(cdrift.at(0, 0) == 1.0);
    CHECK(cdrift.at(0, 1) == 1.0);
    CHECK(cdrift.at(0, 2) == -1.0);
    CHECK(cdrift.at(0, 3) == -1.0);
}

TEST_CASE("dominating bound")
{
    const OracleContext ctx{1, 1.0};
    const Grid box = Grid::build(DomainKind::box, 1, {{-6.0, 6.0}}, {241}, 1.0, 8);
    const auto ce = make_oracle("counterexample", {}, ctx);
    CHECK(verify_bound(ce, box, grid_node_actions(box)).passed);

    for (const auto& entry : catalog()) {
        if (entry.name == "tabulated" || entry.name == "counterexample")
            continue;
        for (int dim : {1, 2}) {
            const OracleContext c{dim, 1.0};
            const auto o = make_oracle(entry.name, {}, c);
            const Grid g = dim == 1 ? Grid::build(DomainKind::torus, 1, {{-1, 1}}, {16}, 1.0, 8)
                                    : Grid::build(DomainKind::torus, 2, {{-1, 1}, {-1, 1}}, {8, 8}, 1.0, 4);
            CHECK_MESSAGE(verify_bound(o, g, o.default_actions()).passed, entry.name);
        }
    }

    const Grid t = Grid::build(DomainKind::torus, 1, {{0, 1}}, {4}, 1.0, 2);
    const CoefficientOracle forced(
        "forced", 1, {}, [](double, const Point&, const Action&) { return Coefficients{{}, 1.0}; },
        [](double, const Point&) { return 0.0; }, {}, ActionSet::scalars({0.0}), 4.0);
    const BoundReport bad = verify_bound(forced, t, forced.default_actions());
    CHECK_FALSE(bad.passed);
    REQUIRE_FALSE(bad.violations.empty());
    CHECK(bad.violations.front().t == 0.0);

    const CoefficientOracle zero(
        "zero", 1, {}, [](double, const Point&, const Action&) { return Coefficients{}; },
        [](double, const Point&) { return 0.0; }, {}, ActionSet::scalars({0.0}), 4.0);
    const BoundReport ok = verify_bound(zero, t, zero.default_actions());
    CHECK(ok.passed);
    CHECK(ok.min_slack == 0.0);
}

TEST_CASE("action sets and truncation")
{
    CHECK_THROWS_AS(ActionSet::scalars({}), std::invalid_argument);
    CHECK_THROWS_AS(ActionSet::scalars({1.0, 1.0}), std::invalid_argument);
    const ActionSet a = ActionSet::scalars({1.0, 2.0, 3.0});
    const ActionSet t2 = truncate_action_set(a, 2);
    CHECK(t2.size() == 2);
    CHECK(t2.truncated());
    CHECK(t2[1][0] == 2.0);
    CHECK(truncate_action_set(a, 7).size() == 3);
    CHECK_THROWS_AS(truncate_action_set(a, 0), std::invalid_argument);

    for (const char* family : {"bang_bang", "dyadic", "levels"}) {
        const ActionSet big = enumerate_family(family, 6);
        for (std::size_t N = 1; N <= big.size(); ++N) {
            const ActionSet small = enumerate_family(family, N);
            for (std::size_t i = 0; i < small.size(); ++i)
                CHECK(small[i] == big[i]);
        }
    }
    CHECK(enumerate_family("bang_bang", 2)[0][0] == 1.0);
    CHECK(enumerate_family("bang_bang", 2)[1][0] == -1.0);
}

TEST_CASE("closed forms of the strict-gap example")
{
    CHECK(counterexample_value(1.0, 0.0, 0.0) == 1.0);
    CHECK(counterexample_mollified_value(1.0, 0.0, 0.0) == doctest::Approx(4.0 / 3.0));
    CHECK(counterexample_value(1.0, 0.0, 1.0) == 2.0);
    CHECK(counterexample_mollified_value(1.0, 0.0, 1.0) == doctest::Approx(10.0 / 3.0));
    CHECK(counterexample_value(1.0, 1.0, 0.4) == 0.0);
    CHECK(counterexample_mollified_value(1.0, 1.0, 0.4) == 0.0);
}

TEST_CASE("tabulated entry reads field files")
{
    const auto dir = std::filesystem::temp_directory_path() / "hjblab_tab_test";
    std::filesystem::create_directories(dir);
    const Grid g = Grid::build(DomainKind::torus, 1, {{0, 1}}, {4}, 1.0, 2);
    Field d(g, 1, 0.5), c(g, 1, 2.0);
    write_field_csv((dir / "drift0.csv").string(), d);
    write_field_csv((dir / "cost0.csv").string(), c);
    const ParamMap p{{"drift0", (dir / "drift0.csv").string()}, {"cost0", (dir / "cost0.csv").string()},
                     {"kind", "torus"}, {"actions", "1"}};
    const auto o = make_oracle("tabulated", p, {1, 1.0});
    const auto v = eval_coeff(o, 0.1, Point{0.3, 0}, Action{0.0, 0});
    CHECK(v.drift[0] == 0.5);
    CHECK(v.cost == 2.0);
    std::filesystem::remove_all(dir);
    CHECK_THROWS(make_oracle("tabulated", p, {1, 1.0}));
}
