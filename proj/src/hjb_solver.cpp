#include "hjblab/hjb_solver.hpp"

#include "hjblab/io.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace hjblab {

void IterationTrace::write_csv(std::ostream& out) const
{
    out << "k,sup_change,monotone_violation,residual,policy_changes\n";
    for (const TraceRow& r : rows)
        out << r.k << ',' << format_double(r.sup_change) << ',' << format_double(r.monotone_violation) << ','
            << format_double(r.residual) << ',' << r.policy_changes << '\n';
}

namespace {

void require_implicit(const ParabolicScheme& scheme)
{
    if (scheme.time_stepping != TimeStepping::implicit_euler)
        throw std::invalid_argument("HJB solvers use implicit Euler time stepping");
}

Field solve_policy(const ActionTable& table, const Policy& policy, BackwardStepper& stepper)
{
    const Grid& g = table.grid();
    Field u(g);
    for (std::size_t n = g.nt(); n-- > 0;) {
        const LevelCoefficients now = table.level(policy, n);
        stepper.step(n, now, nullptr, u.level(n + 1), u.level(n));
    }
    u.require_finite("policy solve");
    return u;
}

double tau_of(const Grid& g, std::size_t n) { return g.T() - g.time(n); }

}  // namespace

PolicyIterationResult policy_iteration(const ActionTable& table, const BoundaryCondition& boundary,
                                       const HjbOptions& options, const Field* u0)
{
    require_implicit(options.scheme);
    if (!(options.tol > 0.0))
        throw std::invalid_argument("policy_iteration: tol must be positive");
    const Grid& g = table.grid();
    const Advection adv = options.scheme.advection;
    BackwardStepper stepper(g, boundary, options.scheme);

    std::vector<Field> iterates;
    iterates.push_back(u0 ? *u0 : Field(g));
    if (!iterates.front().grid().same_shape(g))
        throw std::invalid_argument("policy_iteration: initial field is on another grid");

    const double p = options.lp_exponent > 0.0 ? options.lp_exponent : g.dim() + 3.0;
    const std::optional<SlackSchedule> schedule(std::in_place, options.slack_delta, g.dim(), p);

    PolicyIterationResult res;
    Policy previous;
    bool have_previous = false;
    const double node_total = static_cast<double>(g.node_count());

    for (std::size_t k = 1; k <= options.max_iters; ++k) {
        const Field& last = iterates.back();
        Policy policy = select_policy(table, last, adv);
        const std::size_t changes = have_previous ? policy.differences(previous) : policy.size();
        if (have_previous && changes == 0) {
            res.trace.converged = true;
            break;
        }
        const SlackCheck sc = verify_slack(table, last, policy, adv, *schedule, static_cast<int>(k));
        res.trace.slack_satisfied = res.trace.slack_satisfied && sc.passed;

        Field u = solve_policy(table, policy, stepper);
        TraceRow row;
        row.k = k;
        row.policy_changes = changes;
        row.slack_gap = sc.max_gap;
        double inc = -std::numeric_limits<double>::infinity();
        double sup = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double d = u.values()[i] - last.values()[i];
            sup = std::max(sup, std::abs(d));
            inc = std::max(inc, d);
        }
        row.sup_change = sup;
        row.max_increase = inc;
        row.residual = hjb_residual(u, table, adv);
        res.trace.rows.push_back(row);
        iterates.push_back(std::move(u));
        previous = std::move(policy);
        have_previous = true;

        const bool settled = k == 1 || static_cast<double>(changes) <= options.policy_change_fraction * node_total;
        if (sup < options.tol && settled) {
            res.trace.converged = true;
            break;
        }
        if (!options.keep_iterates && iterates.size() > 2 && options.C_monotone)
            iterates.erase(iterates.begin(), iterates.end() - 2);
    }

    // adjusted-monotonicity check: u^k - u^{k-1} <= C 2^-k (T - s)
    IterationTrace& tr = res.trace;
    const bool full_history = iterates.size() == tr.rows.size() + 1;
    if (options.C_monotone) {
        tr.C = *options.C_monotone;
    } else if (full_history) {
        tr.C_calibrated = true;
        double C = 0.0;
        for (std::size_t k = 2; k < iterates.size(); ++k)
            for (std::size_t n = 0; n < g.nt(); ++n)
                for (std::size_t node = 0; node < g.space_points(); ++node) {
                    const double d = iterates[k].at(n, node) - iterates[k - 1].at(n, node);
                    if (d > 0.0)
                        C = std::max(C, std::ldexp(d, static_cast<int>(k)) / tau_of(g, n));
                }
        tr.C = C;
    }
    if (full_history) {
        for (std::size_t k = 1; k < iterates.size(); ++k) {
            double viol = 0.0;
            for (std::size_t n = 0; n < g.nt(); ++n)
                for (std::size_t node = 0; node < g.space_points(); ++node) {
                    const double d = iterates[k].at(n, node) - iterates[k - 1].at(n, node);
                    viol = std::max(viol, d - std::ldexp(tr.C, -static_cast<int>(k)) * tau_of(g, n));
                }
            tr.rows[k - 1].monotone_violation = viol;
            if (k >= 2 || !tr.C_calibrated)
                tr.max_adjusted_violation = std::max(tr.max_adjusted_violation, viol);
        }
    }
    for (const TraceRow& r : tr.rows)
        if (r.k >= 2)
            tr.max_descent_violation = std::max(tr.max_descent_violation, r.max_increase);

    res.value = iterates.back();
    res.policy = have_previous ? std::move(previous) : select_policy(table, res.value, adv);
    if (options.keep_iterates)
        res.iterates = std::move(iterates);
    return res;
}

DirectResult solve_hjb_direct(const ActionTable& table, const BoundaryCondition& boundary, const HjbOptions& options)
{
    require_implicit(options.scheme);
    const Grid& g = table.grid();
    const Advection adv = options.scheme.advection;
    const std::size_t sweeps = std::max<std::size_t>(options.inner_sweeps, 1);
    BackwardStepper stepper(g, boundary, options.scheme);
    DirectResult res;
    res.value = Field(g);
    res.policy = Policy(g, table.size());
    select_level(table, res.value.level(g.nt()), g.nt(), adv, res.policy);

    for (std::size_t n = g.nt(); n-- > 0;) {
        // explicit start: the Hamiltonian at the gradient of the level above
        select_level(table, res.value.level(n + 1), n, adv, res.policy);
        bool fixed = false;
        std::size_t used = 0;
        for (std::size_t s = 0; s < sweeps; ++s) {
            const LevelCoefficients now = table.level(res.policy, n);
            stepper.step(n, now, nullptr, res.value.level(n + 1), res.value.level(n));
            ++used;
            if (select_level(table, res.value.level(n), n, adv, res.policy) == 0) {
                fixed = true;
                break;
            }
        }
        if (!fixed) {
            ++res.unconverged_levels;
            res.converged = false;
        }
        res.max_sweeps = std::max(res.max_sweeps, used);
    }
    res.value.require_finite("solve_hjb_direct");
    return res;
}

Field hjb_residual_field(const Field& u, const ActionTable& table, Advection advection)
{
    const Grid& g = table.grid();
    if (!u.grid().same_shape(g))
        throw std::invalid_argument("hjb_residual: grid mismatch");
    Field r(g);
    for (std::size_t n = 0; n < g.nt(); ++n) {
        const auto now = u.level(n);
        const auto next = u.level(n + 1);
        for (std::size_t node = 0; node < g.space_points(); ++node) {
            if (g.is_boundary(node))
                continue;
            double lap = 0.0;
            for (int a = 0; a < g.dim(); ++a) {
                const double h = g.dx(a);
                lap += (now[g.neighbour(node, a, 1)] - 2.0 * now[node] + now[g.neighbour(node, a, -1)]) / (h * h);
            }
            r.at(n, node) = (next[node] - now[node]) / g.dt() + lap + discrete_ham_min(table, now, n, node, advection).value;
        }
    }
    return r;
}

double hjb_residual(const Field& u, const ActionTable& table, Advection advection)
{
    const Field r = hjb_residual_field(u, table, advection);
    double m = 0.0;
    for (double v : r.values())
        m = std::max(m, std::abs(v));
    return m;
}

std::vector<double> gradient_gaps(const std::vector<Field>& iterates, const Field& final_value, double margin)
{
    const Grid& g = final_value.grid();
    const Field gf = spatial_gradient(final_value);
    std::vector<double> out;
    for (std::size_t k = 1; k < iterates.size(); ++k) {
        const Field gk = spatial_gradient(iterates[k]);
        double m = 0.0;
        for (std::size_t n = 0; n < g.time_points(); ++n)
            for (std::size_t node = 0; node < g.space_points(); ++node) {
                if (g.boundary_distance(node) < margin)
                    continue;
                for (std::size_t c = 0; c < gf.arity(); ++c)
                    m = std::max(m, std::abs(gk.at(n, node, c) - gf.at(n, node, c)));
            }
        out.push_back(m);
    }
    return out;
}

}  // namespace hjblab
