#include <doctest.h>

#include "hjblab/hjb_solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

using namespace hjblab;

namespace {

double sup_diff(const Field& a, const Field& b)
{
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    return m;
}

Grid bang_bang_grid(std::size_t nx = 64, std::size_t nt = 128)
{
    return Grid::build(DomainKind::torus, 1, {{-1.0, 1.0}}, {nx}, 1.0, nt);
}

}  // namespace

TEST_CASE("bang-bang: policy iteration agrees with the direct solver")
{
    const Grid g = bang_bang_grid();
    const auto bb = make_oracle("bang_bang", {}, {1, 1.0});
    const ActionTable tab = ActionTable::sample(bb, bb.default_actions(), g);
    HjbOptions opt;
    opt.keep_iterates = true;
    const auto pi = policy_iteration(tab, BoundaryCondition::periodic(), opt);
    const auto direct = solve_hjb_direct(tab, BoundaryCondition::periodic(), opt);
    CHECK(pi.trace.converged);
    CHECK(pi.trace.iterations() <= 30);
    CHECK(direct.converged);
    CHECK(sup_diff(pi.value, direct.value) <= 10.0 * opt.tol);
    CHECK(pi.trace.max_descent_violation <= 1e-10);
    CHECK(pi.trace.max_adjusted_violation <= 1e-12);
    CHECK(pi.trace.slack_satisfied);
    CHECK(hjb_residual(direct.value, tab, opt.scheme.advection) <= 1e-9);
    CHECK(pi.trace.rows.back().residual <= opt.tol * (1.0 + tab.drift_sup() / g.dx()));

    const auto gaps = gradient_gaps(pi.iterates, pi.value, 0.0);
    CHECK(gaps.back() == 0.0);
    CHECK(gaps.back() <= gaps.front());

    std::ostringstream os;
    pi.trace.write_csv(os);
    CHECK(os.str().rfind("k,sup_change,monotone_violation,residual,policy_changes\n", 0) == 0);
}

TEST_CASE("value lies below every fixed policy")
{
    const Grid g = bang_bang_grid(32, 32);
    const auto sd = make_oracle("step_drift", {{"c", "0.5"}}, {1, 1.0});
    const ActionTable tab = ActionTable::sample(sd, ActionSet::scalars({-1.0, 0.0, 1.0}), g);
    const auto direct = solve_hjb_direct(tab, BoundaryCondition::periodic());
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 8; ++trial) {
        Policy p(g, 3);
        for (std::size_t n = 0; n <= g.nt(); ++n)
            for (std::size_t i = 0; i < g.nx(); ++i)
                p.set(n, i, static_cast<std::uint32_t>(rng() % 3));
        auto [d, c] = tab.frozen(p);
        const Field u = solve_frozen(d, c, BoundaryCondition::periodic());
        for (std::size_t k = 0; k < u.size(); ++k)
            CHECK(direct.value.values()[k] <= u.values()[k] + 1e-10);
    }
}

TEST_CASE("degenerate problems")
{
    const Grid g = bang_bang_grid(16, 16);
    const auto zero = make_oracle("bang_bang", {{"q", "0"}}, {1, 1.0});
    const ActionTable z = ActionTable::sample(zero, zero.default_actions(), g);
    const auto pz = policy_iteration(z, BoundaryCondition::periodic());
    CHECK(pz.trace.iterations() == 1);
    for (double v : pz.value.values())
        CHECK(v == 0.0);
    const auto dz = solve_hjb_direct(z, BoundaryCondition::periodic());
    for (double v : dz.value.values())
        CHECK(v == 0.0);

    const auto sb = make_oracle("smooth_baseline", {}, {1, 1.0});
    const ActionTable single = ActionTable::sample(sb, sb.default_actions(), g);
    const auto ps = policy_iteration(single, BoundaryCondition::periodic());
    CHECK(ps.trace.iterations() == 1);
    const Field frozen = solve_frozen(single.drift(0), single.cost(0), BoundaryCondition::periodic());
    for (std::size_t k = 0; k < frozen.size(); ++k)
        CHECK(ps.value.values()[k] == frozen.values()[k]);
    const auto ds = solve_hjb_direct(single, BoundaryCondition::periodic());
    CHECK(sup_diff(ds.value, frozen) <= 1e-12);

    // zero field: residual is the sup of the minimal cost
    const auto bb = make_oracle("bang_bang", {}, {1, 1.0});
    const ActionTable tb = ActionTable::sample(bb, bb.default_actions(), g);
    double fmax = 0.0;
    for (double v : tb.cost(0).values())
        fmax = std::max(fmax, v);
    CHECK(hjb_residual(Field(g), tb, Advection::upwind) == doctest::Approx(fmax));

    HjbOptions cn;
    cn.scheme.time_stepping = TimeStepping::crank_nicolson;
    CHECK_THROWS_AS(policy_iteration(tb, BoundaryCondition::periodic(), cn), std::invalid_argument);
}

TEST_CASE("effective Hamiltonian of the strict-gap example")
{
    const double T = 1.0;
    const Grid g = Grid::build(DomainKind::box, 1, {{-6.0, 6.0}}, {241}, T, 512);
    const auto h = make_oracle("constant_drift", {{"c", "0"}, {"q", "1"}}, {1, T});
    const ActionTable tab = ActionTable::sample(h, h.default_actions(), g);
    HjbOptions opt;
    opt.scheme.advection = Advection::central;
    const auto r = solve_hjb_direct(tab, named_boundary("counterexample_value", T), opt);
    CHECK(r.value.at(0, 120) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("monotone descent on several scenarios and in two dimensions")
{
    struct Case {
        std::string name;
        ParamMap params;
        int dim;
    };
    const std::vector<Case> cases{{"checkerboard", {{"kx", "1"}, {"kt", "2"}}, 1},
                                  {"step_drift", {{"c", "0.5"}}, 1},
                                  {"bang_bang", {}, 2}};
    for (const Case& c : cases) {
        const Grid g = c.dim == 1 ? bang_bang_grid(48, 64)
                                  : Grid::build(DomainKind::torus, 2, {{-1, 1}, {-1, 1}}, {16, 16}, 1.0, 16);
        const auto o = make_oracle(c.name, c.params, {c.dim, 1.0});
        const ActionTable tab = ActionTable::sample(o, o.default_actions(), g);
        const auto pi = policy_iteration(tab, BoundaryCondition::natural(g));
        const auto direct = solve_hjb_direct(tab, BoundaryCondition::natural(g));
        CHECK_MESSAGE(pi.trace.converged, c.name);
        CHECK_MESSAGE(pi.trace.max_descent_violation <= 1e-10, c.name);
        CHECK_MESSAGE(sup_diff(pi.value, direct.value) <= 1e-7, c.name);
    }
}
