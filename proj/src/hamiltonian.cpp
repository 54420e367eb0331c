#include "hjblab/hamiltonian.hpp"

#include "hjblab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hjblab {

HamValue ham_min(const CoefficientOracle& oracle, const ActionSet& actions, double t, const Point& x, const Point& p)
{
    if (actions.size() == 0)
        throw std::invalid_argument("ham_min: empty action set");
    HamValue best{std::numeric_limits<double>::infinity(), 0};
    for (std::size_t a = 0; a < actions.size(); ++a) {
        const Coefficients c = eval_coeff(oracle, t, x, actions[a]);
        double v = c.cost;
        for (int k = 0; k < oracle.dim(); ++k)
            v += c.drift[k] * p[k];
        if (v < best.value)
            best = {v, a};
    }
    return best;
}

// ---------------------------------------------------------------------------

Policy::Policy(const Grid& grid, std::size_t action_count, std::uint32_t fill)
    : grid_(grid), action_count_(action_count), index_(grid.node_count(), fill)
{
    if (action_count == 0 || fill >= action_count)
        throw std::invalid_argument("policy: fill index outside the action set");
}

void Policy::set(std::size_t n, std::size_t node, std::uint32_t a)
{
    if (a >= action_count_)
        throw std::out_of_range("policy: action index outside the action set");
    index_[n * grid_.space_points() + node] = a;
}

std::span<const std::uint32_t> Policy::level(std::size_t n) const
{
    return {index_.data() + n * grid_.space_points(), grid_.space_points()};
}

std::size_t Policy::differences(const Policy& other) const
{
    if (other.index_.size() != index_.size())
        throw std::invalid_argument("policy: shape mismatch");
    std::size_t d = 0;
    for (std::size_t i = 0; i < index_.size(); ++i)
        d += index_[i] != other.index_[i];
    return d;
}

// ---------------------------------------------------------------------------

SlackSchedule::SlackSchedule(double delta, int dim, double p) : delta_(delta), dim_(dim)
{
    if (!(delta > dim / (2.0 * p)))
        throw std::invalid_argument("slack schedule: delta must exceed d / (2p)");
}

double SlackSchedule::value(int k, const Point& x) const
{
    double r2 = 0.0;
    for (int i = 0; i < dim_; ++i)
        r2 += x[i] * x[i];
    return std::ldexp(1.0, -k) * std::pow(1.0 + r2, -delta_);
}

// ---------------------------------------------------------------------------

ActionTable ActionTable::sample(const CoefficientOracle& oracle, const ActionSet& actions, const Grid& grid)
{
    if (oracle.dim() != grid.dim() || actions.dim() != grid.dim())
        throw std::invalid_argument("action table: dimension mismatch");
    for (const Action& a : actions.actions())
        if (!oracle.admits(a))
            throw std::out_of_range("action table: action outside the universe of " + oracle.name());
    ActionTable t;
    t.name_ = oracle.name();
    const std::size_t A = actions.size();
    const std::size_t dim = static_cast<std::size_t>(grid.dim());
    t.drift_.assign(A, Field(grid, dim));
    t.cost_.assign(A, Field(grid));
    const std::size_t levels = grid.time_points();
    parallel_for(A * levels, [&](std::size_t begin, std::size_t end) {
        for (std::size_t job = begin; job < end; ++job) {
            const std::size_t a = job / levels;
            const std::size_t n = job % levels;
            const double time = grid.time(n);
            for (std::size_t node = 0; node < grid.space_points(); ++node) {
                const Coefficients c = oracle.raw(time, grid.point(node), actions[a]);
                t.drift_[a].set_vector(n, node, c.drift);
                t.cost_[a].at(n, node) = c.cost;
            }
        }
    });
    for (std::size_t a = 0; a < A; ++a) {
        t.drift_[a].require_finite("sampled drift of " + oracle.name());
        t.cost_[a].require_finite("sampled cost of " + oracle.name());
    }
    return t;
}

ActionTable ActionTable::from_fields(std::string name, std::vector<Field> drift, std::vector<Field> cost)
{
    if (cost.empty() || drift.size() != cost.size())
        throw std::invalid_argument("action table: need one drift and one cost field per action");
    const Grid& g = cost.front().grid();
    for (std::size_t a = 0; a < cost.size(); ++a) {
        if (!cost[a].grid().same_shape(g) || !drift[a].grid().same_shape(g) ||
            drift[a].arity() != static_cast<std::size_t>(g.dim()) || cost[a].arity() != 1)
            throw std::invalid_argument("action table: fields disagree in shape");
        drift[a].require_finite("action table drift");
        cost[a].require_finite("action table cost");
    }
    ActionTable t;
    t.name_ = std::move(name);
    t.drift_ = std::move(drift);
    t.cost_ = std::move(cost);
    return t;
}

LevelCoefficients ActionTable::level(const Policy& policy, std::size_t n) const
{
    const Grid& g = grid();
    LevelCoefficients lc(g.space_points());
    const auto idx = policy.level(n);
    for (std::size_t node = 0; node < g.space_points(); ++node) {
        lc.drift[node] = drift_at(idx[node], n, node);
        lc.cost[node] = cost_at(idx[node], n, node);
    }
    return lc;
}

std::pair<Field, Field> ActionTable::frozen(const Policy& policy) const
{
    const Grid& g = grid();
    Field d(g, static_cast<std::size_t>(g.dim())), c(g);
    for (std::size_t n = 0; n < g.time_points(); ++n)
        for (std::size_t node = 0; node < g.space_points(); ++node) {
            const std::size_t a = policy.at(n, node);
            d.set_vector(n, node, drift_at(a, n, node));
            c.at(n, node) = cost_at(a, n, node);
        }
    return {std::move(d), std::move(c)};
}

double ActionTable::drift_sup() const
{
    double m = 0.0;
    for (const Field& d : drift_)
        for (std::size_t n = 0; n < d.grid().time_points(); ++n)
            for (std::size_t node = 0; node < d.grid().space_points(); ++node)
                m = std::max(m, d.magnitude(n, node));
    return m;
}

ActionTable ActionTable::subset(const std::vector<std::size_t>& indices) const
{
    std::vector<Field> d, c;
    for (std::size_t i : indices) {
        if (i >= size())
            throw std::out_of_range("action table: subset index out of range");
        d.push_back(drift_[i]);
        c.push_back(cost_[i]);
    }
    return from_fields(name_, std::move(d), std::move(c));
}

// ---------------------------------------------------------------------------

double discrete_ham_value(const ActionTable& table, std::span<const double> u, std::size_t n, std::size_t node,
                          std::size_t action, Advection advection)
{
    const Grid& g = table.grid();
    double v = table.cost_at(action, n, node);
    if (g.is_boundary(node))
        return v;
    const Point b = table.drift_at(action, n, node);
    const double u0 = u[node];
    for (int a = 0; a < g.dim(); ++a) {
        if (b[a] == 0.0)
            continue;
        const double h = g.dx(a);
        const double up = u[g.neighbour(node, a, 1)];
        const double um = u[g.neighbour(node, a, -1)];
        if (advection == Advection::upwind)
            v += b[a] > 0.0 ? b[a] * (up - u0) / h : b[a] * (u0 - um) / h;
        else
            v += b[a] * (up - um) / (2.0 * h);
    }
    return v;
}

HamValue discrete_ham_min(const ActionTable& table, std::span<const double> u, std::size_t n, std::size_t node,
                          Advection advection)
{
    thread_local std::vector<double> values;
    values.resize(table.size());
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < table.size(); ++a) {
        values[a] = discrete_ham_value(table, u, n, node, a, advection);
        lowest = std::min(lowest, values[a]);
    }
    // values this close to the minimum count as ties, so rounding noise cannot flip the choice
    const double tie = kTieTolerance * (1.0 + std::abs(lowest));
    for (std::size_t a = 0; a < table.size(); ++a)
        if (values[a] <= lowest + tie)
            return {lowest, a};
    return {lowest, 0};
}

std::size_t select_level(const ActionTable& table, std::span<const double> u, std::size_t n, Advection advection,
                         Policy& policy)
{
    const Grid& g = table.grid();
    const std::size_t N = g.space_points();
    std::vector<std::uint32_t> chosen(N);
    parallel_for(N, [&](std::size_t begin, std::size_t end) {
        for (std::size_t node = begin; node < end; ++node)
            chosen[node] = static_cast<std::uint32_t>(discrete_ham_min(table, u, n, node, advection).index);
    });
    std::size_t changes = 0;
    for (std::size_t node = 0; node < N; ++node) {
        if (policy.at(n, node) != chosen[node]) {
            ++changes;
            policy.set(n, node, chosen[node]);
        }
    }
    return changes;
}

Policy select_policy(const ActionTable& table, const Field& u, Advection advection)
{
    const Grid& g = table.grid();
    if (!u.grid().same_shape(g))
        throw std::invalid_argument("select_policy: value field is on another grid");
    Policy p(g, table.size());
    for (std::size_t n = 0; n < g.time_points(); ++n)
        select_level(table, u.level(n), n, advection, p);
    return p;
}

Policy select_policy(const Field& grad, const CoefficientOracle& oracle, const ActionSet& actions,
                     const std::optional<SlackSchedule>& slack, int k)
{
    const Grid& g = grad.grid();
    if (grad.arity() != static_cast<std::size_t>(g.dim()))
        throw std::invalid_argument("select_policy: gradient field must have arity dim");
    Policy p(g, actions.size());
    for (std::size_t n = 0; n < g.time_points(); ++n)
        for (std::size_t node = 0; node < g.space_points(); ++node) {
            const Point x = g.point(node);
            const HamValue h = ham_min(oracle, actions, g.time(n), x, grad.vector_at(n, node));
            if (slack) {
                const double tol = slack->value(k, x);
                if (!(tol > 0.0))
                    throw std::logic_error("select_policy: slack must be positive");
            }
            p.set(n, node, static_cast<std::uint32_t>(h.index));
        }
    return p;
}

SlackCheck verify_slack(const ActionTable& table, const Field& u, const Policy& policy, Advection advection,
                        const SlackSchedule& schedule, int k)
{
    const Grid& g = table.grid();
    SlackCheck r;
    r.max_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < g.nt(); ++n) {
        const auto level = u.level(n);
        for (std::size_t node = 0; node < g.space_points(); ++node) {
            const double realized = discrete_ham_value(table, level, n, node, policy.at(n, node), advection);
            const double best = discrete_ham_min(table, level, n, node, advection).value;
            const double gap = realized - best;
            r.max_gap = std::max(r.max_gap, gap);
            r.max_excess = std::max(r.max_excess, gap - schedule.value(k, g.point(node)));
        }
    }
    r.passed = r.max_excess <= 0.0;
    return r;
}

}  // namespace hjblab
