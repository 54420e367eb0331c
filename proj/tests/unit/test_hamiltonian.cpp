#include <doctest.h>

#include "hjblab/hamiltonian.hpp"
#include "hjblab/hjb_solver.hpp"

#include <random>

using namespace hjblab;

namespace {

CoefficientOracle pure_bang_bang()
{
    return make_oracle("bang_bang", {{"q", "0"}}, {1, 1.0});
}

}  // namespace

TEST_CASE("pointwise minimum")
{
    const auto bb = pure_bang_bang();
    const ActionSet A = bb.default_actions();  // {-1, +1}
    const HamValue h = ham_min(bb, A, 0.0, Point{0.3, 0}, Point{2.0, 0});
    CHECK(h.value == -2.0);
    CHECK(A[h.index][0] == -1.0);

    const auto sd = make_oracle("step_drift", {{"f0", "1"}}, {1, 1.0});
    const ActionSet B = ActionSet::scalars({0.5, -0.5, 0.0});
    const HamValue z = ham_min(sd, B, 0.0, Point{0.2, 0}, Point{0.0, 0});
    CHECK(z.index == 0);
    CHECK(z.value == doctest::Approx(1.04));

    const Grid box = Grid::build(DomainKind::box, 1, {{-1.0, 1.0}}, {9}, 1.0, 2);
    const auto ce = make_oracle("counterexample", {}, {1, 1.0});
    const ActionSet nodes = grid_node_actions(box);
    for (std::size_t i = 0; i < box.nx(); ++i) {
        const double x = box.coord(0, i);
        const HamValue c = ham_min(ce, nodes, 0.0, Point{x, 0}, Point{1.0, 0});
        CHECK(nodes[c.index][0] == x);
        CHECK(c.value == x * x);
    }
}

TEST_CASE("lower envelope and concavity in p")
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    const auto sd = make_oracle("step_drift", {}, {1, 1.0});
    const ActionSet A = enumerate_family("dyadic", 6);
    for (int trial = 0; trial < 200; ++trial) {
        const double t = 0.5, x = U(rng);
        const Point p1{U(rng), 0}, p2{U(rng), 0};
        const HamValue h1 = ham_min(sd, A, t, Point{x, 0}, p1);
        for (std::size_t a = 0; a < A.size(); ++a) {
            const Coefficients c = sd.raw(t, Point{x, 0}, A[a]);
            CHECK(h1.value <= c.drift[0] * p1[0] + c.cost);
        }
        const double lam = std::abs(U(rng)) / 3.0;
        const Point pm{lam * p1[0] + (1 - lam) * p2[0], 0};
        const double lhs = ham_min(sd, A, t, Point{x, 0}, pm).value;
        const double rhs = lam * h1.value + (1 - lam) * ham_min(sd, A, t, Point{x, 0}, p2).value;
        CHECK(lhs >= rhs - 1e-12);
    }
}

TEST_CASE("gradient selectors")
{
    const Grid t = Grid::build(DomainKind::torus, 1, {{-1.0, 1.0}}, {8}, 1.0, 2);
    const auto bb = make_oracle("bang_bang", {}, {1, 1.0});
    Field grad(t, 1);
    for (std::size_t n = 0; n <= t.nt(); ++n)
        for (std::size_t i = 0; i < t.nx(); ++i)
            grad.at(n, i) = 2.0 * t.coord(0, i);
    const ActionSet A = bb.default_actions();
    const Policy p = select_policy(grad, bb, A);
    for (std::size_t i = 0; i < t.nx(); ++i) {
        const double x = t.coord(0, i);
        CHECK(A[p.at(0, i)][0] == (x > 0 ? -1.0 : 1.0));
    }
    Field zero(t, 1);
    const Policy tie = select_policy(zero, bb, A);
    CHECK(tie.at(0, 3) == 0);

    const auto cd = make_oracle("constant_drift", {}, {1, 1.0});
    const Policy single = select_policy(grad, cd, cd.default_actions());
    for (std::size_t n = 0; n <= t.nt(); ++n)
        for (std::size_t i = 0; i < t.nx(); ++i)
            CHECK(single.at(n, i) == 0);

    const SlackSchedule s(1.0, 1, 4.0);
    CHECK(s.value(0, Point{}) == 1.0);
    CHECK(s.value(1, Point{1.0, 0}) == 0.25);
    const ActionSet two = ActionSet::scalars({0.0, 0.5});
    const CoefficientOracle lin("lin", 1, {}, [](double, const Point&, const Action& a) { return Coefficients{{}, a[0]}; },
                                [](double, const Point&) { return 1.0; }, {}, two, 4.0);
    const Policy withslack = select_policy(grad, lin, two, s, 0);
    CHECK(withslack.at(0, 0) == 0);
    CHECK_THROWS_AS(SlackSchedule(0.1, 2, 4.0), std::invalid_argument);
}

TEST_CASE("action tables and discrete selection")
{
    const Grid t = Grid::build(DomainKind::torus, 1, {{-1.0, 1.0}}, {16}, 1.0, 4);
    const auto bb = make_oracle("bang_bang", {}, {1, 1.0});
    const ActionTable tab = ActionTable::sample(bb, bb.default_actions(), t);
    CHECK(tab.size() == 2);
    CHECK(tab.drift_sup() == 1.0);
    Field u(t);
    for (std::size_t n = 0; n <= t.nt(); ++n)
        for (std::size_t i = 0; i < t.nx(); ++i)
            u.at(n, i) = t.coord(0, i) * t.coord(0, i);
    const Policy p = select_policy(tab, u, Advection::upwind);
    for (std::size_t i = 0; i < t.nx(); ++i) {
        const double x = t.coord(0, i);
        if (std::abs(x) < 0.9)
            CHECK(bb.default_actions()[p.at(1, i)][0] == (x > 0 ? -1.0 : 1.0));
    }
    const SlackSchedule s(1.0, 1, 4.0);
    CHECK(verify_slack(tab, u, p, Advection::upwind, s, 30).passed);
    CHECK(verify_slack(tab, u, p, Advection::upwind, s, 30).max_gap == 0.0);
    Policy wrong(t, 2, 0);
    CHECK_FALSE(verify_slack(tab, u, wrong, Advection::upwind, s, 30).passed);
    CHECK_THROWS_AS(ActionTable::sample(bb, ActionSet::scalars({3.0}), t), std::out_of_range);
}

TEST_CASE("value is nonincreasing in the truncation level")
{
    const Grid t = Grid::build(DomainKind::torus, 1, {{-1.0, 1.0}}, {32}, 1.0, 32);
    const auto sd = make_oracle("step_drift", {{"c", "0.5"}}, {1, 1.0});
    const ActionSet A = ActionSet::scalars({0.0, 1.0, -1.0});
    std::vector<Field> values;
    for (std::size_t N = 1; N <= 3; ++N) {
        const ActionTable tab = ActionTable::sample(sd, truncate_action_set(A, N), t);
        values.push_back(solve_hjb_direct(tab, BoundaryCondition::periodic()).value);
    }
    bool strict = false;
    for (std::size_t k = 1; k < values.size(); ++k)
        for (std::size_t i = 0; i < values[k].size(); ++i) {
            CHECK(values[k].values()[i] <= values[k - 1].values()[i] + 1e-10);
            strict = strict || values[k].values()[i] < values[k - 1].values()[i] - 1e-6;
        }
    CHECK(strict);
}
