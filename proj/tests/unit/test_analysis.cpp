#include <doctest.h>

#include "hjblab/analysis.hpp"

#include <cmath>
#include <sstream>

using namespace hjblab;

namespace {

Grid torus(std::size_t nx = 64, std::size_t nt = 128)
{
    return Grid::build(DomainKind::torus, 1, {{-1.0, 1.0}}, {nx}, 1.0, nt);
}

SimConfig sim_on(const Grid& g, std::size_t M, double dt, double x0, std::uint64_t seed = 17)
{
    SimConfig s;
    s.paths = M;
    s.dt_sim = dt;
    s.seed = seed;
    s.domain = g;
    s.x = Point{x0, 0};
    return s;
}

}  // namespace

TEST_CASE("tolerances")
{
    const Grid g = torus(64, 128);
    CHECK(discretization_tolerance(g) == doctest::Approx(5.0 * (1.0 / 1024 + 1.0 / 128)));
    CHECK(discretization_tolerance(g, 1e-3) == doctest::Approx(5.0 * (1.0 / 1024 + 1.0 / 128 + 1e-3)));
}

TEST_CASE("verification: single action and bang-bang")
{
    const Grid g = torus(32, 64);
    const auto one = make_oracle("constant_drift", {{"c", "0"}, {"f0", "1"}}, {1, 1.0});
    const ActionTable t1 = ActionTable::sample(one, one.default_actions(), g);
    const auto u1 = solve_hjb_direct(t1, BoundaryCondition::periodic());
    const Feedback idle = Feedback::constant("a=0", Action{});
    const auto single = verification_check(u1.value, one, sim_on(g, 200, 1e-2, 0.3), {idle}, idle);
    CHECK(single.passed);
    CHECK(single.rows.size() == 2);
    CHECK(single.rows[1].excess.mean == 0.0);

    const Grid gb = torus();
    const auto bb = make_oracle("bang_bang", {}, {1, 1.0});
    const ActionSet A = bb.default_actions();
    const auto direct = solve_hjb_direct(ActionTable::sample(bb, A, gb), BoundaryCondition::periodic());
    const Feedback argmin = Feedback::from_policy("argmin", direct.policy, A);
    const auto cands = candidate_feedbacks(A, gb, 5, 99);
    REQUIRE(cands.size() == 5);
    CHECK(cands[0].name() == "constant[0]");
    CHECK(cands[2].name() == "random[0]");
    const auto rep = verification_check(direct.value, bb, sim_on(gb, 4000, 1e-3, 0.5), cands, argmin);
    CHECK(rep.passed);
    // a = +1 pushes away from the origin: strictly worse than the argmin under common random numbers
    CHECK(rep.rows[1].excess.mean > 3.0 * rep.rows[1].excess.se);
    const auto j = rep.to_json();
    CHECK(j["rows"].size() == 6);

    const auto dpp = dpp_battery(direct.value, bb, argmin, cands[0], {0.25, 0.5, 0.75}, sim_on(gb, 4000, 1e-3, 0.5));
    CHECK(dpp.passed);
    CHECK(dpp.rows.size() == 3);
}

TEST_CASE("mollification sweeps distinguish the two regimes")
{
    SweepSpec s;
    s.scenario = "step_drift";
    s.oracle = make_oracle("step_drift", {{"c", "0.5"}}, {1, 1.0});
    s.actions = ActionSet::scalars({-1.0, 1.0});
    s.grid = torus(32, 64);
    s.eps = {0.4, 0.2, 0.1, 0.01};
    s.boundary = BoundaryCondition::periodic();
    const SweepReport r = mollify_value_sweep(s);
    CHECK_FALSE(r.rungs.back().resolved);
    CHECK(r.smallest().eps == 0.1);
    CHECK(r.liminf_status == "pass");
    CHECK(r.gaps_decreasing);
    CHECK(r.converges);
    CHECK(r.smallest().sup_gap <= r.tolerance);
    CHECK(r.smallest().full_sup_gap >= r.smallest().sup_gap);
    for (const auto& rung : r.rungs)
        if (rung.resolved) {
            const double phi = 1.5 + 1.0;
            for (double v : rung.value.values())
                CHECK(std::abs(v) <= phi * 1.0 + 1e-9);
        }
    std::ostringstream csv;
    r.write_gap_csv(csv);
    CHECK(csv.str().rfind("t,x,gap_0.4,gap_0.2,gap_0.1\n", 0) == 0);
    CHECK(r.summary()["rungs"].size() == 4);

    SweepSpec ce;
    ce.scenario = "counterexample";
    ce.grid = Grid::build(DomainKind::box, 1, {{-4.0, 4.0}}, {41}, 1.0, 32);
    ce.oracle = make_oracle("counterexample", {}, {1, 1.0});
    ce.actions = grid_node_actions(ce.grid);
    ce.eps = {0.4, 0.2};
    ce.boundary = named_boundary("counterexample_lower", 1.0);
    ce.mollified_boundary = named_boundary("counterexample_mollified", 1.0);
    ce.exact_limit = [](double s, const Point& x) { return counterexample_mollified_value(1.0, s, x[0]); };
    const SweepReport c = mollify_value_sweep(ce);
    CHECK(c.liminf_passed);
    CHECK_FALSE(c.converges);
    CHECK(c.persistent_gap >= 0.3);
    CHECK(*c.exact_limit_probe == doctest::Approx(4.0 / 3.0));

    s.eps = {0.1, 0.2};
    CHECK_THROWS_AS(mollify_value_sweep(s), std::invalid_argument);
    s.eps = {0.01};
    CHECK_THROWS_AS(mollify_value_sweep(s), std::invalid_argument);
}

TEST_CASE("strict-gap report")
{
    const Grid box = Grid::build(DomainKind::box, 1, {{-6.0, 6.0}}, {241}, 1.0, 512);
    const auto r = counterexample_report(1.0, {{0.0, 0.0}, {0.0, 1.0}, {1.0, 0.5}}, box, std::nullopt);
    CHECK(r.passed);
    CHECK(r.origin_gap >= 0.3);
    CHECK(r.samples[0].exact_gap == doctest::Approx(1.0 / 3.0));
    CHECK(r.samples[0].numeric_value == doctest::Approx(1.0).epsilon(0.02));
    CHECK(r.samples[0].numeric_limit == doctest::Approx(4.0 / 3.0).epsilon(0.02));
    CHECK(r.samples[1].exact_value == doctest::Approx(2.0));
    CHECK(r.samples[1].exact_limit == doctest::Approx(10.0 / 3.0));
    CHECK(r.samples[2].numeric_value == 0.0);
    CHECK(r.samples[2].numeric_limit == 0.0);
    CHECK(r.advice.empty());
    CHECK(r.elapsed < 10.0);

    const Grid tight = Grid::build(DomainKind::box, 1, {{-2.0, 2.0}}, {81}, 1.0, 128);
    const auto small = counterexample_report(1.0, {{0.0, 1.5}}, tight, std::nullopt, 1e-12);
    CHECK_FALSE(small.advice.empty());
    CHECK_FALSE(small.passed);

    std::ostringstream csv;
    r.write_csv(csv);
    CHECK(csv.str().rfind("s,x,exact_value,numeric_value", 0) == 0);
    CHECK_THROWS_AS(counterexample_report(1.0, {}, torus(), std::nullopt), std::invalid_argument);
}

TEST_CASE("countable truncation")
{
    TruncationSpec t;
    t.scenario = "bang_bang";
    t.oracle = make_oracle("bang_bang", {}, {1, 1.0});
    t.family = "bang_bang";
    t.N_list = {1, 2};
    t.grid = torus(32, 64);
    t.eps = {0.4, 0.2, 0.1};
    t.boundary = BoundaryCondition::periodic();
    SimConfig s = sim_on(t.grid, 500, 1e-2, 0.5);
    t.sim = s;
    const TruncationReport r = countable_truncation_study(t);
    CHECK(r.nonincreasing_in_N);
    CHECK(r.strict_somewhere);
    CHECK(r.eps_converges);
    CHECK(r.passed);
    CHECK(r.open_loop.size() == 3);

    TruncationSpec flat = t;
    flat.oracle = make_oracle("constant_drift", {{"c", "0"}, {"q", "1"}}, {1, 1.0});
    flat.family = "levels";
    flat.N_list = {1, 3};
    flat.sim.reset();
    const TruncationReport f = countable_truncation_study(flat);
    CHECK_FALSE(f.strict_somewhere);
    for (std::size_t i = 0; i < f.rows[0].value.size(); ++i)
        CHECK(f.rows[1].value.values()[i] == f.rows[0].value.values()[i]);

    t.N_list = {2, 1};
    CHECK_THROWS_AS(countable_truncation_study(t), std::invalid_argument);
}
