#include "hjblab/analysis.hpp"

#include "hjblab/io.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace hjblab {

namespace {

nlohmann::json estimate_json(const MCEstimate& e)
{
    return {{"mean", e.mean}, {"se", e.se}, {"M", e.paths}, {"exits", e.exits}};
}

// Nodes entering gap statistics: levels with t_min <= t < T, off the box edge.
template <class Fn>
void for_interior(const Grid& g, double t_min, Fn&& fn)
{
    for (std::size_t n = 0; n < g.nt(); ++n) {
        if (g.time(n) < t_min - 1e-12 * g.T())
            continue;
        for (std::size_t node = 0; node < g.space_points(); ++node)
            if (!g.is_boundary(node))
                fn(n, node);
    }
}

double interior_sup(const Field& f, double t_min)
{
    double m = 0.0;
    for_interior(f.grid(), t_min, [&](std::size_t n, std::size_t node) { m = std::max(m, std::abs(f.at(n, node))); });
    return m;
}

void require_decreasing(const std::vector<double>& eps, const char* what)
{
    if (eps.empty())
        throw std::invalid_argument(std::string(what) + ": empty eps ladder");
    for (std::size_t k = 0; k < eps.size(); ++k) {
        if (!(eps[k] > 0.0))
            throw std::invalid_argument(std::string(what) + ": eps must be positive");
        if (k > 0 && !(eps[k] < eps[k - 1]))
            throw std::invalid_argument(std::string(what) + ": eps ladder must be strictly decreasing");
    }
}

bool nonincreasing(const std::vector<double>& v, double slack)
{
    for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k] > v[k - 1] + slack)
            return false;
    return true;
}

Field solve_on(const CoefficientOracle& oracle, const ActionSet& actions, const Grid& grid,
               const BoundaryCondition& bc, const HjbOptions& options)
{
    return solve_hjb_direct(ActionTable::sample(oracle, actions, grid), bc, options).value;
}

}  // namespace

double discretization_tolerance(const Grid& grid, double dt_sim)
{
    const double h = grid.max_dx();
    return 5.0 * (h * h + grid.dt() + dt_sim);
}

// ---------------------------------------------------------------------------

nlohmann::json VerificationReport::to_json() const
{
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : rows)
        rs.push_back({{"control", r.control},
                      {"argmin", r.argmin},
                      {"estimate", estimate_json(r.estimate)},
                      {"excess", estimate_json(r.excess)},
                      {"margin", r.margin},
                      {"passed", r.passed}});
    return {{"u", u},
            {"lower_tolerance", lower_tolerance},
            {"argmin_tolerance", argmin_tolerance},
            {"rows", rs},
            {"passed", passed}};
}

VerificationReport verification_check(const Field& u, const CoefficientOracle& oracle, const SimConfig& sim,
                                      const std::vector<Feedback>& candidates, const Feedback& argmin)
{
    VerificationReport rep;
    rep.u = u.interpolate(sim.s, sim.x);
    rep.lower_tolerance = discretization_tolerance(u.grid());
    rep.argmin_tolerance = discretization_tolerance(u.grid(), sim.dt_sim);

    std::size_t exits = 0;
    const std::vector<double> best = simulate_paths(oracle, argmin, sim, &exits);
    VerificationRow top;
    top.control = argmin.name();
    top.argmin = true;
    top.estimate = summarize(best, sim);
    top.estimate.exits = exits;
    top.excess = summarize(std::vector<double>(best.size(), 0.0), sim);
    top.margin = 3.0 * top.estimate.se + rep.argmin_tolerance - std::abs(top.estimate.mean - rep.u);
    top.passed = top.margin >= 0.0;
    rep.rows.push_back(top);

    for (const Feedback& c : candidates) {
        std::vector<double> cost = simulate_paths(oracle, c, sim, &exits);
        VerificationRow row;
        row.control = c.name();
        row.estimate = summarize(cost, sim);
        row.estimate.exits = exits;
        for (std::size_t i = 0; i < cost.size(); ++i)
            cost[i] -= best[i];
        row.excess = summarize(cost, sim);
        row.margin = row.estimate.mean - (rep.u - 3.0 * row.estimate.se - rep.lower_tolerance);
        row.passed = row.margin >= 0.0;
        rep.rows.push_back(row);
    }
    for (const auto& r : rep.rows)
        rep.passed = rep.passed && r.passed;
    return rep;
}

std::vector<Feedback> candidate_feedbacks(const ActionSet& actions, const Grid& grid, std::size_t count,
                                          std::uint64_t seed)
{
    std::vector<Feedback> out;
    for (std::size_t a = 0; a < actions.size() && out.size() < count; ++a) {
        std::ostringstream name;
        name << "constant[" << a << "]";
        out.push_back(Feedback::constant(name.str(), actions[a]));
    }
    std::mt19937_64 rng(seed);
    for (std::size_t k = 0; out.size() < count; ++k) {
        Policy p(grid, actions.size());
        const std::size_t block = std::max<std::size_t>(1, grid.nt() / 8);
        for (std::size_t n0 = 0; n0 <= grid.nt(); n0 += block)
            for (std::size_t node = 0; node < grid.space_points(); ++node) {
                const auto a = static_cast<std::uint32_t>(rng() % actions.size());
                for (std::size_t n = n0; n < std::min(n0 + block, grid.time_points()); ++n)
                    p.set(n, node, a);
            }
        out.push_back(Feedback::from_policy("random[" + std::to_string(k) + "]", p, actions));
    }
    return out;
}

nlohmann::json DppReport::to_json() const
{
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : rows)
        rs.push_back({{"t_mid", r.t_mid},
                      {"optimal", estimate_json(r.optimal)},
                      {"suboptimal", estimate_json(r.suboptimal)},
                      {"optimal_passed", r.optimal_passed},
                      {"suboptimal_detected", r.suboptimal_detected}});
    return {{"tolerance", tolerance}, {"rows", rs}, {"passed", passed}};
}

DppReport dpp_battery(const Field& u, const CoefficientOracle& oracle, const Feedback& argmin,
                      const Feedback& suboptimal, const std::vector<double>& t_mids, const SimConfig& sim)
{
    DppReport rep;
    rep.tolerance = discretization_tolerance(u.grid(), sim.dt_sim);
    for (double t : t_mids) {
        DppRow row;
        row.t_mid = t;
        row.optimal = dpp_residual(u, oracle, argmin, t, sim);
        row.suboptimal = dpp_residual(u, oracle, suboptimal, t, sim);
        row.optimal_passed = std::abs(row.optimal.mean) <= 3.0 * row.optimal.se + rep.tolerance;
        row.suboptimal_detected = row.suboptimal.mean > 3.0 * row.suboptimal.se;
        rep.passed = rep.passed && row.optimal_passed && row.suboptimal_detected;
        rep.rows.push_back(row);
    }
    return rep;
}

// ---------------------------------------------------------------------------

const SweepRung& SweepReport::smallest() const
{
    for (auto it = rungs.rbegin(); it != rungs.rend(); ++it)
        if (it->resolved)
            return *it;
    throw std::logic_error("sweep: no resolved rung");
}

nlohmann::json SweepReport::summary() const
{
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : rungs) {
        nlohmann::json j{{"eps", r.eps}, {"resolved", r.resolved}};
        if (r.resolved) {
            j["sup_gap"] = r.sup_gap;
            j["full_sup_gap"] = r.full_sup_gap;
            j["lp_gap"] = r.lp_gap;
            j["min_gap"] = r.min_gap;
            j["max_gap"] = r.max_gap;
            j["negative_fraction"] = r.negative_fraction;
            j["probe_value"] = r.probe_value;
            j["probe_gap"] = r.probe_gap;
        }
        rs.push_back(j);
    }
    nlohmann::json out{{"scenario", scenario},
                       {"tolerance", tolerance},
                       {"base_probe", base_probe},
                       {"rungs", rs},
                       {"liminf_status", liminf_status},
                       {"liminf_passed", liminf_passed},
                       {"gaps_decreasing", gaps_decreasing},
                       {"converges", converges},
                       {"persistent_gap", persistent_gap}};
    if (exact_value_probe)
        out["exact_value_probe"] = *exact_value_probe;
    if (exact_limit_probe)
        out["exact_limit_probe"] = *exact_limit_probe;
    return out;
}

void SweepReport::write_gap_csv(std::ostream& out) const
{
    const Grid& g = base.grid();
    out << "t,x";
    if (g.dim() == 2)
        out << ",y";
    std::vector<const SweepRung*> live;
    for (const auto& r : rungs)
        if (r.resolved) {
            live.push_back(&r);
            out << ",gap_" << format_double(r.eps);
        }
    out << '\n';
    for (std::size_t n = 0; n < g.time_points(); ++n)
        for (std::size_t node = 0; node < g.space_points(); ++node) {
            const Point x = g.point(node);
            out << format_double(g.time(n)) << ',' << format_double(x[0]);
            if (g.dim() == 2)
                out << ',' << format_double(x[1]);
            for (const SweepRung* r : live)
                out << ',' << format_double(r->gap.at(n, node));
            out << '\n';
        }
}

SweepReport mollify_value_sweep(const SweepSpec& spec)
{
    require_decreasing(spec.eps, "mollify_value_sweep");
    const Grid& g = spec.grid;
    SweepReport rep;
    rep.scenario = spec.scenario;
    rep.tolerance = 5.0 * g.max_dx();
    rep.base = solve_on(spec.oracle, spec.actions, g, spec.boundary, spec.options);
    rep.base_probe = rep.base.interpolate(spec.probe_s, spec.probe_x);
    if (spec.exact_value)
        rep.exact_value_probe = spec.exact_value(spec.probe_s, spec.probe_x);
    if (spec.exact_limit)
        rep.exact_limit_probe = spec.exact_limit(spec.probe_s, spec.probe_x);

    const BoundaryCondition& mbc = spec.mollified_boundary ? *spec.mollified_boundary : spec.boundary;
    for (double eps : spec.eps) {
        SweepRung r;
        r.eps = eps;
        r.resolved = resolves(g, eps);
        if (r.resolved) {
            const MollifierKernel kernel(eps, g.dim());
            const CoefficientOracle moll = mollify_oracle(spec.oracle, kernel, g, spec.per_eps);
            r.value = solve_on(moll, spec.actions, g, mbc, spec.options);
            r.gap = r.value - rep.base;
            r.min_gap = std::numeric_limits<double>::infinity();
            r.max_gap = -std::numeric_limits<double>::infinity();
            r.full_sup_gap = interior_sup(r.gap, 0.0);
            std::size_t count = 0, negative = 0;
            for_interior(g, eps, [&](std::size_t n, std::size_t node) {
                const double v = r.gap.at(n, node);
                r.min_gap = std::min(r.min_gap, v);
                r.max_gap = std::max(r.max_gap, v);
                ++count;
                negative += v < -rep.tolerance;
            });
            r.sup_gap = std::max(std::abs(r.min_gap), std::abs(r.max_gap));
            r.lp_gap = lp_norm_interior(r.gap, spec.oracle.lp_exponent(), 0.0, TimeWindow::between(g, eps, g.T()));
            r.negative_fraction = count ? static_cast<double>(negative) / static_cast<double>(count) : 0.0;
            r.probe_value = r.value.interpolate(spec.probe_s, spec.probe_x);
            r.probe_gap = r.probe_value - rep.base_probe;
        }
        rep.rungs.push_back(std::move(r));
    }

    std::vector<const SweepRung*> live;
    std::vector<double> sups;
    for (const auto& r : rep.rungs)
        if (r.resolved) {
            live.push_back(&r);
            sups.push_back(r.sup_gap);
        }
    if (live.empty())
        throw std::invalid_argument("mollify_value_sweep: no eps on the ladder is resolved by the grid");
    const std::size_t m = live.size();
    const bool last_ok = live[m - 1]->min_gap >= -rep.tolerance;
    const bool prev_ok = m < 2 || live[m - 2]->min_gap >= -rep.tolerance;
    rep.liminf_status = last_ok && prev_ok ? "pass" : (last_ok || prev_ok ? "oscillation" : "fail");
    rep.liminf_passed = rep.liminf_status != "fail";
    rep.gaps_decreasing = nonincreasing(sups, 1e-12);
    rep.converges = rep.gaps_decreasing && sups.back() <= rep.tolerance;
    rep.persistent_gap = live[m - 1]->probe_gap;
    if (m >= 2)
        rep.persistent_gap = std::min(rep.persistent_gap, live[m - 2]->probe_gap);
    return rep;
}

// ---------------------------------------------------------------------------

nlohmann::json CounterexampleReport::to_json() const
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& s : samples) {
        nlohmann::json j{{"s", s.s},
                         {"x", s.x},
                         {"exact_value", s.exact_value},
                         {"numeric_value", s.numeric_value},
                         {"exact_limit", s.exact_limit},
                         {"numeric_limit", s.numeric_limit},
                         {"exact_gap", s.exact_gap},
                         {"numeric_gap", s.numeric_gap},
                         {"contamination", s.contamination}};
        if (s.mc_value)
            j["mc_value"] = estimate_json(*s.mc_value);
        if (s.mc_limit)
            j["mc_limit"] = estimate_json(*s.mc_limit);
        rows.push_back(j);
    }
    return {{"T", T},
            {"box", {grid.axis(0).extent.lo, grid.axis(0).extent.hi}},
            {"nx", grid.nx()},
            {"nt", grid.nt()},
            {"samples", rows},
            {"contamination", contamination},
            {"contamination_tolerance", contamination_tolerance},
            {"advice", advice},
            {"origin_gap", origin_gap},
            {"required_gap", required_gap},
            {"cross_check_passed", cross_check_passed},
            {"passed", passed}};
}

void CounterexampleReport::write_csv(std::ostream& out) const
{
    out << "s,x,exact_value,numeric_value,exact_limit,numeric_limit,exact_gap,numeric_gap,mc_value,mc_value_se,"
           "mc_limit,mc_limit_se\n";
    for (const auto& s : samples) {
        out << format_double(s.s) << ',' << format_double(s.x) << ',' << format_double(s.exact_value) << ','
            << format_double(s.numeric_value) << ',' << format_double(s.exact_limit) << ','
            << format_double(s.numeric_limit) << ',' << format_double(s.exact_gap) << ','
            << format_double(s.numeric_gap);
        for (const auto* e : {&s.mc_value, &s.mc_limit}) {
            if (*e)
                out << ',' << format_double((*e)->mean) << ',' << format_double((*e)->se);
            else
                out << ",,";
        }
        out << '\n';
    }
}

CounterexampleReport counterexample_report(double T, const std::vector<std::pair<double, double>>& samples,
                                           const Grid& grid, const std::optional<SimConfig>& sim,
                                           double contamination_tolerance, double required_gap)
{
    if (grid.dim() != 1 || grid.is_torus())
        throw std::invalid_argument("counterexample_report: needs a 1-d box");
    if (std::abs(grid.T() - T) > 1e-12 * T)
        throw std::invalid_argument("counterexample_report: grid horizon differs from T");
    const auto start = std::chrono::steady_clock::now();
    const OracleContext ctx{1, T};
    const CoefficientOracle flat = make_oracle("constant_drift", {{"c", "0"}, {"q", "1"}}, ctx);
    const CoefficientOracle shifted = make_oracle("constant_drift", {{"c", "1"}, {"q", "1"}}, ctx);
    HjbOptions opt;
    opt.scheme.advection = Advection::central;
    const auto solve = [&](const CoefficientOracle& o, const Grid& g, const char* bc) {
        return solve_on(o, o.default_actions(), g, named_boundary(bc, T), opt);
    };

    const Interval ext = grid.axis(0).extent;
    const double dx = grid.dx();
    const auto extra = static_cast<std::size_t>(std::llround(4.0 / dx));
    const Grid wide = Grid::build(DomainKind::box, 1, {{ext.lo - 2.0, ext.hi + 2.0}}, {grid.nx() + extra}, T,
                                  grid.nt());

    CounterexampleReport rep;
    rep.T = T;
    rep.grid = grid;
    rep.contamination_tolerance = contamination_tolerance;
    rep.required_gap = required_gap;
    const Field V = solve(flat, grid, "counterexample_value");
    const Field W = solve(shifted, grid, "counterexample_mollified");
    const Field Vw = solve(flat, wide, "counterexample_value");
    const Field Ww = solve(shifted, wide, "counterexample_mollified");

    const double tol = sim ? discretization_tolerance(grid, sim->dt_sim) : 0.0;
    const CoefficientOracle ce = make_oracle("counterexample", {}, ctx);
    const Feedback follow = Feedback::analytic("a=x", [](double, const Point& x) { return Action{x[0], 0.0}; });
    const Feedback idle = Feedback::constant("a=0", Action{});
    for (const auto& [s, x] : samples) {
        CounterexampleSample cs;
        cs.s = s;
        cs.x = x;
        const Point p{x, 0.0};
        cs.exact_value = counterexample_value(T, s, x);
        cs.exact_limit = counterexample_mollified_value(T, s, x);
        cs.numeric_value = V.interpolate(s, p);
        cs.numeric_limit = W.interpolate(s, p);
        cs.exact_gap = cs.exact_limit - cs.exact_value;
        cs.numeric_gap = cs.numeric_limit - cs.numeric_value;
        cs.contamination = std::max(std::abs(cs.numeric_value - Vw.interpolate(s, p)),
                                    std::abs(cs.numeric_limit - Ww.interpolate(s, p)));
        rep.contamination = std::max(rep.contamination, cs.contamination);
        if (sim && s < T) {
            SimConfig run = *sim;
            run.s = s;
            run.x = p;
            run.domain = grid;
            run.dt_sim = std::min(sim->dt_sim, T - s);
            cs.mc_value = simulate_cost(ce, follow, run);
            cs.mc_limit = simulate_cost(shifted, idle, run);
            rep.cross_check_passed = rep.cross_check_passed &&
                                     std::abs(cs.mc_value->mean - cs.numeric_value) <= 3.0 * cs.mc_value->se + tol &&
                                     std::abs(cs.mc_limit->mean - cs.numeric_limit) <= 3.0 * cs.mc_limit->se + tol;
        }
        rep.samples.push_back(cs);
    }
    rep.origin_gap = W.interpolate(0.0, Point{}) - V.interpolate(0.0, Point{});
    if (rep.contamination > contamination_tolerance) {
        std::ostringstream os;
        os << "boundary contamination " << format_double(rep.contamination) << " exceeds "
           << format_double(contamination_tolerance) << "; enlarge the box beyond [" << format_double(ext.lo) << ", "
           << format_double(ext.hi) << "]";
        rep.advice = os.str();
    }
    rep.passed = rep.origin_gap >= required_gap && rep.cross_check_passed &&
                 rep.contamination <= contamination_tolerance;
    rep.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

// ---------------------------------------------------------------------------

nlohmann::json TruncationReport::to_json() const
{
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : rows)
        rs.push_back({{"N", r.N},
                      {"value_sup", lp_norm(r.value, std::numeric_limits<double>::infinity())},
                      {"sup_gap", r.sup_gap},
                      {"eps_decreasing", r.eps_decreasing}});
    nlohmann::json ol = nlohmann::json::array();
    for (std::size_t k = 0; k < open_loop.size(); ++k)
        ol.push_back({{"eps", eps[k]}, {"difference", estimate_json(open_loop[k])}});
    return {{"scenario", scenario},
            {"eps", eps},
            {"tolerance", tolerance},
            {"rows", rs},
            {"nonincreasing_in_N", nonincreasing_in_N},
            {"strict_somewhere", strict_somewhere},
            {"eps_converges", eps_converges},
            {"open_loop", ol},
            {"open_loop_decreasing", open_loop_decreasing},
            {"passed", passed}};
}

TruncationReport countable_truncation_study(const TruncationSpec& spec)
{
    require_decreasing(spec.eps, "countable_truncation_study");
    for (std::size_t k = 1; k < spec.N_list.size(); ++k)
        if (spec.N_list[k] <= spec.N_list[k - 1])
            throw std::invalid_argument("countable_truncation_study: N_list must be increasing");
    const Grid& g = spec.grid;
    for (double eps : spec.eps)
        if (!resolves(g, eps))
            throw std::invalid_argument("countable_truncation_study: eps " + format_double(eps) +
                                        " is not resolved by the grid");
    TruncationReport rep;
    rep.scenario = spec.scenario;
    rep.eps = spec.eps;
    rep.tolerance = 5.0 * g.max_dx();

    std::vector<CoefficientOracle> mollified;
    for (double eps : spec.eps)
        mollified.push_back(mollify_oracle(spec.oracle, MollifierKernel(eps, g.dim()), g, spec.per_eps));

    rep.eps_converges = true;
    for (std::size_t N : spec.N_list) {
        const ActionSet actions = enumerate_family(spec.family, N);
        TruncationRow row;
        row.N = N;
        row.value = solve_on(spec.oracle, actions, g, spec.boundary, spec.options);
        for (std::size_t k = 0; k < mollified.size(); ++k)
            row.sup_gap.push_back(
                interior_sup(solve_on(mollified[k], actions, g, spec.boundary, spec.options) - row.value, spec.eps[k]));
        row.eps_decreasing = nonincreasing(row.sup_gap, 1e-12);
        rep.eps_converges = rep.eps_converges && row.eps_decreasing && row.sup_gap.back() <= rep.tolerance;
        rep.rows.push_back(std::move(row));
    }

    rep.nonincreasing_in_N = true;
    for (std::size_t k = 1; k < rep.rows.size(); ++k) {
        const auto prev = rep.rows[k - 1].value.values();
        const auto cur = rep.rows[k].value.values();
        for (std::size_t i = 0; i < cur.size(); ++i) {
            rep.nonincreasing_in_N = rep.nonincreasing_in_N && cur[i] <= prev[i] + 10.0 * spec.options.tol;
            rep.strict_somewhere = rep.strict_somewhere || cur[i] < prev[i] - 1e-6;
        }
    }

    if (spec.sim) {
        const Action first = enumerate_family(spec.family, 1)[0];
        const Feedback theta = Feedback::constant("a_1", first);
        const std::vector<double> raw = simulate_paths(spec.oracle, theta, *spec.sim);
        for (const CoefficientOracle& m : mollified) {
            std::vector<double> d = simulate_paths(m, theta, *spec.sim);
            for (std::size_t i = 0; i < d.size(); ++i)
                d[i] -= raw[i];
            rep.open_loop.push_back(summarize(d, *spec.sim));
        }
        for (std::size_t k = 1; k < rep.open_loop.size(); ++k) {
            const MCEstimate& a = rep.open_loop[k - 1];
            const MCEstimate& b = rep.open_loop[k];
            rep.open_loop_decreasing = rep.open_loop_decreasing && std::abs(b.mean) <= std::abs(a.mean) + 3.0 * b.se;
        }
    }
    rep.passed = rep.nonincreasing_in_N && rep.eps_converges && rep.open_loop_decreasing;
    return rep;
}

}  // namespace hjblab
