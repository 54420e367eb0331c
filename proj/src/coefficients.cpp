#include "hjblab/coefficients.hpp"

#include "hjblab/io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hjblab {

double param_double(const ParamMap& params, const std::string& key, double fallback)
{
    auto it = params.find(key);
    if (it == params.end())
        return fallback;
    try {
        std::size_t used = 0;
        const double v = std::stod(it->second, &used);
        if (used != it->second.size())
            throw std::invalid_argument(it->second);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("parameter '" + key + "' is not a number: " + it->second);
    }
}

std::string param_string(const ParamMap& params, const std::string& key, const std::string& fallback)
{
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

// ---------------------------------------------------------------------------

ActionSet::ActionSet(std::vector<Action> actions, int dim, bool truncated, std::string family)
    : actions_(std::move(actions)), dim_(dim), truncated_(truncated), family_(std::move(family))
{
    if (actions_.empty())
        throw std::invalid_argument("action set must be nonempty");
    if (dim < 1 || dim > kMaxDim)
        throw std::invalid_argument("action set: bad dimension");
    std::vector<Action> sorted = actions_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw std::invalid_argument("action set contains duplicate actions");
}

ActionSet ActionSet::scalars(const std::vector<double>& values)
{
    std::vector<Action> a;
    a.reserve(values.size());
    for (double v : values)
        a.push_back(Action{v, 0.0});
    return ActionSet(std::move(a), 1);
}

ActionSet truncate_action_set(const ActionSet& set, std::size_t N)
{
    if (N < 1)
        throw std::invalid_argument("truncate_action_set: N must be at least 1");
    const std::size_t keep = std::min(N, set.size());
    std::vector<Action> prefix(set.actions().begin(), set.actions().begin() + static_cast<long>(keep));
    return ActionSet(std::move(prefix), set.dim(), true, set.family());
}

ActionSet enumerate_family(const std::string& family, std::size_t N)
{
    if (N < 1)
        throw std::invalid_argument("enumerate_family: N must be at least 1");
    std::vector<double> v;
    if (family == "bang_bang") {
        // finite family {+1, -1}; longer requests stop at its size
        v = {1.0, -1.0};
        v.resize(std::min<std::size_t>(N, 2));
    } else if (family == "dyadic") {
        // +1, -1, +1/2, -1/2, +1/4, ...
        for (std::size_t i = 0; i < N; ++i) {
            const double mag = std::ldexp(1.0, -static_cast<int>(i / 2));
            v.push_back(i % 2 == 0 ? mag : -mag);
        }
    } else if (family == "levels") {
        // 0, +1, -1, +1/2, -1/2, ...
        v.push_back(0.0);
        for (std::size_t i = 0; v.size() < N; ++i) {
            const double mag = std::ldexp(1.0, -static_cast<int>(i / 2));
            v.push_back(i % 2 == 0 ? mag : -mag);
        }
    } else {
        throw std::invalid_argument("unknown action family: " + family);
    }
    std::vector<Action> a;
    for (double x : v)
        a.push_back(Action{x, 0.0});
    return ActionSet(std::move(a), 1, true, family);
}

ActionSet grid_node_actions(const Grid& grid)
{
    if (grid.dim() != 1)
        throw std::invalid_argument("grid_node_actions: 1-d grids only");
    std::vector<Action> a;
    for (std::size_t i = 0; i < grid.space_points(); ++i)
        a.push_back(grid.point(i));
    return ActionSet(std::move(a), 1, false, "grid_nodes");
}

// ---------------------------------------------------------------------------

CoefficientOracle::CoefficientOracle(std::string name, int dim, ParamMap params, EvalFn eval, BoundFn bound,
                                     AdmitFn admits, ActionSet default_actions, double lp_exponent)
    : name_(std::move(name)),
      dim_(dim),
      params_(std::move(params)),
      eval_(std::move(eval)),
      bound_(std::move(bound)),
      admits_(std::move(admits)),
      default_actions_(std::move(default_actions)),
      lp_exponent_(lp_exponent)
{
    if (!(lp_exponent_ > dim + 2))
        throw std::invalid_argument("oracle '" + name_ + "': integrability exponent must exceed d + 2");
}

Coefficients eval_coeff(const CoefficientOracle& oracle, double t, const Point& x, const Action& a)
{
    if (!oracle.admits(a))
        throw std::out_of_range("action outside the universe of '" + oracle.name() + "'");
    const Coefficients c = oracle.raw(t, x, a);
    bool finite = std::isfinite(c.cost);
    for (int k = 0; k < oracle.dim(); ++k)
        finite = finite && std::isfinite(c.drift[k]);
    if (!finite)
        throw std::logic_error("oracle '" + oracle.name() + "' produced a non-finite value");
    return c;
}

std::pair<Field, Field> sample_to_grid(const CoefficientOracle& oracle, const Grid& grid, const Action& action)
{
    if (!oracle.admits(action))
        throw std::out_of_range("action outside the universe of '" + oracle.name() + "'");
    Field drift(grid, static_cast<std::size_t>(grid.dim()));
    Field cost(grid);
    for (std::size_t n = 0; n < grid.time_points(); ++n) {
        const double t = grid.time(n);
        for (std::size_t node = 0; node < grid.space_points(); ++node) {
            const Coefficients c = oracle.raw(t, grid.point(node), action);
            drift.set_vector(n, node, c.drift);
            cost.at(n, node) = c.cost;
        }
    }
    drift.require_finite("sample_to_grid(" + oracle.name() + ")");
    cost.require_finite("sample_to_grid(" + oracle.name() + ")");
    return {std::move(drift), std::move(cost)};
}

namespace {

double norm(const Point& v, int dim)
{
    double s = 0.0;
    for (int k = 0; k < dim; ++k)
        s += v[k] * v[k];
    return std::sqrt(s);
}

double norm2(const Point& v, int dim)
{
    double s = 0.0;
    for (int k = 0; k < dim; ++k)
        s += v[k] * v[k];
    return s;
}

}  // namespace

BoundReport verify_bound(const CoefficientOracle& oracle, const Grid& grid, const ActionSet& actions)
{
    BoundReport rep;
    bool first = true;
    for (std::size_t n = 0; n < grid.time_points(); ++n) {
        const double t = grid.time(n);
        for (std::size_t node = 0; node < grid.space_points(); ++node) {
            const Point x = grid.point(node);
            const double phi = oracle.bound(t, x);
            for (std::size_t a = 0; a < actions.size(); ++a) {
                const Coefficients c = oracle.raw(t, x, actions[a]);
                const double slack = phi - (norm(c.drift, grid.dim()) + std::abs(c.cost));
                if (first) {
                    rep.min_slack = rep.max_slack = slack;
                    first = false;
                } else {
                    rep.min_slack = std::min(rep.min_slack, slack);
                    rep.max_slack = std::max(rep.max_slack, slack);
                }
                ++rep.checked;
                if (!(slack >= 0.0)) {
                    rep.passed = false;
                    rep.violations.push_back({t, x, a, -slack});
                }
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Catalog

namespace {

double sign_closed(double v) { return v >= 0.0 ? 1.0 : -1.0; }

/// +1 on [0, 1/2) of every unit period, -1 on [1/2, 1).
double square_wave(double y)
{
    const double frac = y - std::floor(y);
    return frac < 0.5 ? 1.0 : -1.0;
}

ActionSet unit_actions(int dim)
{
    if (dim == 1)
        return ActionSet::scalars({-1.0, 1.0});
    return ActionSet({Action{1.0, 0.0}, Action{-1.0, 0.0}, Action{0.0, 1.0}, Action{0.0, -1.0}}, 2);
}

CoefficientOracle::AdmitFn box_admit(int dim, double limit)
{
    return [dim, limit](const Action& a) {
        for (int k = 0; k < dim; ++k)
            if (!(std::abs(a[k]) <= limit))
                return false;
        return true;
    };
}

double exponent(const ParamMap& p, int dim) { return param_double(p, "p", dim + 3.0); }

CoefficientOracle make_counterexample(const ParamMap& p, const OracleContext& ctx)
{
    if (ctx.dim != 1)
        throw std::invalid_argument("counterexample is one-dimensional");
    auto eval = [](double, const Point& x, const Action& a) {
        Coefficients c;
        c.drift[0] = x[0] == a[0] ? 0.0 : 1.0;
        c.cost = x[0] * x[0];
        return c;
    };
    auto bound = [](double, const Point& x) { return 1.0 + x[0] * x[0]; };
    auto admit = [](const Action& a) { return std::isfinite(a[0]); };
    return CoefficientOracle("counterexample", 1, p, eval, bound, admit, ActionSet::scalars({0.0}), exponent(p, 1));
}

CoefficientOracle make_constant_drift(const ParamMap& p, const OracleContext& ctx)
{
    const int dim = ctx.dim;
    const double c = param_double(p, "c", 1.0);
    const double f0 = param_double(p, "f0", 0.0);
    const double q = param_double(p, "q", 0.0);
    auto eval = [=](double, const Point& x, const Action&) {
        Coefficients out;
        for (int k = 0; k < dim; ++k)
            out.drift[k] = c;
        out.cost = f0 + q * norm2(x, dim);
        return out;
    };
    const double drift_norm = std::abs(c) * std::sqrt(static_cast<double>(dim));
    auto bound = [=](double, const Point& x) { return drift_norm + std::abs(f0) + std::abs(q) * norm2(x, dim); };
    ActionSet defaults = dim == 1 ? ActionSet::scalars({0.0}) : ActionSet({Action{0.0, 0.0}}, 2);
    return CoefficientOracle("constant_drift", dim, p, eval, bound, {}, defaults, exponent(p, dim));
}

CoefficientOracle make_step_drift(const ParamMap& p, const OracleContext& ctx)
{
    const int dim = ctx.dim;
    const double c = param_double(p, "c", 1.0);
    const double jump = param_double(p, "jump", 0.0);
    const double f0 = param_double(p, "f0", 0.0);
    const double q = param_double(p, "q", 1.0);
    auto eval = [=](double, const Point& x, const Action& a) {
        Coefficients out;
        for (int k = 0; k < dim; ++k)
            out.drift[k] = a[k];
        out.drift[0] += c * sign_closed(x[0] - jump);
        out.cost = f0 + q * norm2(x, dim);
        return out;
    };
    const double drift_norm = std::sqrt(static_cast<double>(dim)) + std::abs(c);
    auto bound = [=](double, const Point& x) { return drift_norm + std::abs(f0) + std::abs(q) * norm2(x, dim); };
    return CoefficientOracle("step_drift", dim, p, eval, bound, box_admit(dim, 1.0), unit_actions(dim),
                             exponent(p, dim));
}

CoefficientOracle make_checkerboard(const ParamMap& p, const OracleContext& ctx)
{
    const int dim = ctx.dim;
    const double kx = param_double(p, "kx", 1.0);
    const double kt = param_double(p, "kt", 0.0);
    const double f0 = param_double(p, "f0", 0.0);
    const double q = param_double(p, "q", 1.0);
    auto eval = [=](double t, const Point& x, const Action& a) {
        double s = 1.0;
        for (int k = 0; k < dim; ++k)
            s *= square_wave(kx * x[k]);
        if (kt > 0.0)
            s *= square_wave(kt * t);
        Coefficients out;
        for (int k = 0; k < dim; ++k)
            out.drift[k] = a[k] * s;
        out.cost = f0 + q * norm2(x, dim);
        return out;
    };
    const double drift_norm = std::sqrt(static_cast<double>(dim));
    auto bound = [=](double, const Point& x) { return drift_norm + std::abs(f0) + std::abs(q) * norm2(x, dim); };
    return CoefficientOracle("checkerboard", dim, p, eval, bound, box_admit(dim, 1.0), unit_actions(dim),
                             exponent(p, dim));
}

CoefficientOracle make_bang_bang(const ParamMap& p, const OracleContext& ctx)
{
    const int dim = ctx.dim;
    const double q = param_double(p, "q", 1.0);
    auto eval = [=](double, const Point& x, const Action& a) {
        Coefficients out;
        for (int k = 0; k < dim; ++k)
            out.drift[k] = a[k];
        out.cost = q * norm2(x, dim);
        return out;
    };
    auto bound = [=](double, const Point& x) { return 1.0 + std::abs(q) * norm2(x, dim); };
    auto admit = [dim](const Action& a) { return norm(a, dim) <= 1.0 + 1e-12; };
    return CoefficientOracle("bang_bang", dim, p, eval, bound, admit, unit_actions(dim), exponent(p, dim));
}

struct SmoothData {
    double beta, k, T;
    int dim;
    double g(double tau) const { return tau * tau; }
    double dg(double tau) const { return 2.0 * tau; }
};

SmoothData smooth_data(const ParamMap& p, const OracleContext& ctx)
{
    const double period = param_double(p, "period", 1.0);
    if (!(period > 0.0))
        throw std::invalid_argument("smooth_baseline: period must be positive");
    return {param_double(p, "beta", 0.5), 2.0 * std::numbers::pi / period, ctx.T, ctx.dim};
}

CoefficientOracle make_smooth_baseline(const ParamMap& p, const OracleContext& ctx)
{
    const SmoothData sd = smooth_data(p, ctx);
    const int dim = ctx.dim;
    // Cost manufactured so that u = g(T - t) prod sin(k x_i) solves the a = 0 problem.
    auto eval = [sd, dim](double t, const Point& x, const Action& a) {
        const double tau = sd.T - t;
        double S = 1.0;
        for (int i = 0; i < dim; ++i)
            S *= std::sin(sd.k * x[i]);
        Coefficients out;
        double advect = 0.0;
        for (int i = 0; i < dim; ++i) {
            const double b0 = sd.beta * std::cos(sd.k * x[i]);
            double Ci = std::cos(sd.k * x[i]);
            for (int j = 0; j < dim; ++j)
                if (j != i)
                    Ci *= std::sin(sd.k * x[j]);
            advect += b0 * sd.g(tau) * sd.k * Ci;
            out.drift[i] = b0 + a[i];
        }
        out.cost = sd.dg(tau) * S + dim * sd.k * sd.k * sd.g(tau) * S - advect;
        return out;
    };
    const double d = dim;
    const double phi = std::sqrt(d) * (sd.beta + 1.0) + 2.0 * sd.T + d * sd.k * sd.k * sd.T * sd.T +
                       d * sd.beta * sd.k * sd.T * sd.T;
    auto bound = [phi](double, const Point&) { return phi; };
    ActionSet defaults = dim == 1 ? ActionSet::scalars({0.0}) : ActionSet({Action{0.0, 0.0}}, 2);
    return CoefficientOracle("smooth_baseline", dim, p, eval, bound, box_admit(dim, 1.0), defaults,
                             exponent(p, dim));
}

CoefficientOracle make_tabulated_from_files(const ParamMap& p, const OracleContext& ctx)
{
    const DomainKind kind = param_string(p, "kind", "box") == "torus" ? DomainKind::torus : DomainKind::box;
    const std::size_t count = static_cast<std::size_t>(param_double(p, "actions", 1.0));
    if (count < 1)
        throw std::invalid_argument("tabulated: actions must be at least 1");
    std::vector<Field> drifts, costs;
    for (std::size_t a = 0; a < count; ++a) {
        const std::string idx = std::to_string(a);
        Field cost = read_field_csv(param_string(p, "cost" + idx, ""), kind);
        Field drift(cost.grid(), static_cast<std::size_t>(ctx.dim));
        for (int k = 0; k < ctx.dim; ++k) {
            const std::string key = ctx.dim == 1 ? "drift" + idx : "drift" + idx + (k == 0 ? "_x" : "_y");
            Field comp = read_field_csv(param_string(p, key, ""), kind);
            if (!comp.grid().same_shape(cost.grid()))
                throw std::invalid_argument("tabulated: drift and cost files are on different grids");
            for (std::size_t n = 0; n < comp.grid().time_points(); ++n)
                for (std::size_t node = 0; node < comp.grid().space_points(); ++node)
                    drift.at(n, node, static_cast<std::size_t>(k)) = comp.at(n, node);
        }
        drifts.push_back(std::move(drift));
        costs.push_back(std::move(cost));
    }
    return make_tabulated_oracle(std::move(drifts), std::move(costs), p);
}

}  // namespace

const std::vector<CatalogEntry>& catalog()
{
    static const std::vector<CatalogEntry> entries = {
        {"counterexample", "b(x,a) = 0 if x == a else 1, f = x^2, Phi = 1 + x^2 (1-d)", {}},
        {"constant_drift", "b = c, f = f0 + q |x|^2", {{"c", "1"}, {"f0", "0"}, {"q", "0"}}},
        {"step_drift", "b = a + c sign(x_1 - jump) e_1, f = f0 + q |x|^2, |a_i| <= 1",
         {{"c", "1"}, {"jump", "0"}, {"f0", "0"}, {"q", "1"}}},
        {"checkerboard", "b = a * square(kx x) * square(kt t), f = f0 + q |x|^2",
         {{"kx", "1"}, {"kt", "0"}, {"f0", "0"}, {"q", "1"}}},
        {"bang_bang", "b = a, f = q |x|^2, A = {-1, 1} (unit vectors in 2-d)", {{"q", "1"}}},
        {"smooth_baseline", "b = beta cos(k x) + a, manufactured f with u = (T-t)^2 prod sin(k x_i)",
         {{"beta", "0.5"}, {"period", "1"}}},
        {"tabulated", "nearest-node lookup into CSV fields drift<k>[_x|_y], cost<k>", {{"actions", "1"}}},
    };
    return entries;
}

CoefficientOracle make_oracle(const std::string& name, const ParamMap& params, const OracleContext& ctx)
{
    if (ctx.dim < 1 || ctx.dim > kMaxDim)
        throw std::invalid_argument("make_oracle: dim must be 1 or 2");
    if (name == "counterexample")
        return make_counterexample(params, ctx);
    if (name == "constant_drift")
        return make_constant_drift(params, ctx);
    if (name == "step_drift")
        return make_step_drift(params, ctx);
    if (name == "checkerboard")
        return make_checkerboard(params, ctx);
    if (name == "bang_bang")
        return make_bang_bang(params, ctx);
    if (name == "smooth_baseline")
        return make_smooth_baseline(params, ctx);
    if (name == "tabulated")
        return make_tabulated_from_files(params, ctx);
    throw std::invalid_argument("unknown catalog entry: " + name);
}

double smooth_baseline_exact(const ParamMap& params, const OracleContext& ctx, double t, const Point& x)
{
    const SmoothData sd = smooth_data(params, ctx);
    double S = 1.0;
    for (int i = 0; i < ctx.dim; ++i)
        S *= std::sin(sd.k * x[i]);
    return sd.g(ctx.T - t) * S;
}

double counterexample_value(double T, double s, double x)
{
    const double tau = T - s;
    return x * x * tau + tau * tau;
}

double counterexample_mollified_value(double T, double s, double x)
{
    const double tau = T - s;
    return ((x + tau) * (x + tau) * (x + tau) - x * x * x) / 3.0 + tau * tau;
}

CoefficientOracle make_tabulated_oracle(std::vector<Field> drift_per_action, std::vector<Field> cost_per_action,
                                        ParamMap params)
{
    if (drift_per_action.empty() || drift_per_action.size() != cost_per_action.size())
        throw std::invalid_argument("tabulated: need one drift and one cost field per action");
    const Grid grid = cost_per_action.front().grid();
    const int dim = grid.dim();
    for (std::size_t a = 0; a < cost_per_action.size(); ++a) {
        if (!cost_per_action[a].grid().same_shape(grid) || !drift_per_action[a].grid().same_shape(grid) ||
            drift_per_action[a].arity() != static_cast<std::size_t>(dim))
            throw std::invalid_argument("tabulated: all fields must share one grid");
        cost_per_action[a].require_finite("tabulated cost");
        drift_per_action[a].require_finite("tabulated drift");
    }
    struct Tables {
        Grid grid;
        std::vector<Field> drift, cost;
        std::size_t level(double t) const
        {
            const double u = std::clamp(t / grid.dt(), 0.0, static_cast<double>(grid.nt()));
            return static_cast<std::size_t>(std::lround(u));
        }
    };
    auto tables = std::make_shared<Tables>(Tables{grid, std::move(drift_per_action), std::move(cost_per_action)});
    const std::size_t count = tables->cost.size();
    auto eval = [tables](double t, const Point& x, const Action& a) {
        const std::size_t idx = static_cast<std::size_t>(std::lround(a[0]));
        const std::size_t n = tables->level(t);
        const std::size_t node = tables->grid.nearest_node(x);
        Coefficients out;
        out.drift = tables->drift[idx].vector_at(n, node);
        out.cost = tables->cost[idx].at(n, node);
        return out;
    };
    auto bound = [tables, dim](double t, const Point& x) {
        const std::size_t n = tables->level(t);
        const std::size_t node = tables->grid.nearest_node(x);
        double phi = 0.0;
        for (std::size_t a = 0; a < tables->cost.size(); ++a)
            phi = std::max(phi, tables->drift[a].magnitude(n, node) + std::abs(tables->cost[a].at(n, node)));
        return phi;
    };
    auto admit = [count](const Action& a) {
        return a[0] >= 0.0 && a[0] == std::floor(a[0]) && a[0] < static_cast<double>(count) && a[1] == 0.0;
    };
    std::vector<Action> acts;
    for (std::size_t a = 0; a < count; ++a)
        acts.push_back(Action{static_cast<double>(a), 0.0});
    const double p = param_double(params, "p", dim + 3.0);
    return CoefficientOracle("tabulated", dim, std::move(params), eval, bound, admit, ActionSet(acts, dim), p);
}

}  // namespace hjblab
