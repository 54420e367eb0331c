#include "hjblab/sde_montecarlo.hpp"

#include "hjblab/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <boost/random/normal_distribution.hpp>

namespace hjblab {

namespace {

std::uint64_t splitmix(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::mt19937_64 path_engine(std::uint64_t seed, std::size_t path)
{
    return std::mt19937_64(splitmix(splitmix(seed) ^ splitmix(0x5bd1e995ULL + path)));
}

struct PathResult {
    double cost = 0.0;
    Point end{};
    bool exited = false;
};

// Euler-Maruyama from (s, x) to t_end in `steps` equal steps.
PathResult run_path(const CoefficientOracle& oracle, const Feedback& feedback, const Grid& domain, double s,
                    const Point& x0, double t_end, std::size_t steps, std::mt19937_64& rng)
{
    const int dim = domain.dim();
    const double h = (t_end - s) / static_cast<double>(steps);
    const double sigma = std::sqrt(2.0 * h);
    boost::random::normal_distribution<double> normal;
    PathResult r;
    Point X = x0;
    const bool torus = domain.is_torus();
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = s + h * static_cast<double>(k);
        const Point y = torus ? domain.wrap(X) : domain.clamp(X);
        const Coefficients c = oracle.raw(t, y, feedback(t, y));
        r.cost += c.cost * h;
        for (int a = 0; a < dim; ++a)
            X[a] += c.drift[a] * h + sigma * normal(rng);
        if (!torus && !r.exited && !domain.contains(X))
            r.exited = true;
    }
    r.end = torus ? domain.wrap(X) : X;
    return r;
}

std::size_t step_count(double span, double dt_sim)
{
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(span / dt_sim)));
}

double seconds_since(std::chrono::steady_clock::time_point start)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

void SimConfig::validate() const
{
    if (paths < 1)
        throw std::invalid_argument("simulation: path count must be at least 1");
    if (!(dt_sim > 0.0) || dt_sim > domain.T() - s + 1e-15)
        throw std::invalid_argument("simulation: dt_sim must lie in (0, T - s]");
    if (!(s >= 0.0 && s < domain.T()))
        throw std::invalid_argument("simulation: start time outside [0, T)");
    if (!domain.contains(x))
        throw std::invalid_argument("simulation: start point outside the domain");
}

std::size_t SimConfig::steps() const { return step_count(domain.T() - s, dt_sim); }

nlohmann::json SimConfig::to_json() const
{
    nlohmann::json xs = nlohmann::json::array();
    for (int a = 0; a < domain.dim(); ++a)
        xs.push_back(x[a]);
    return {{"M", paths}, {"dt_sim", dt_sim}, {"seed", seed}, {"s", s}, {"x", xs}, {"steps", steps()}};
}

MCEstimate summarize(const std::vector<double>& samples, const SimConfig& config)
{
    MCEstimate e;
    e.config = config;
    e.paths = samples.size();
    if (samples.empty())
        return e;
    const double M = static_cast<double>(samples.size());
    const double shift = samples.front();
    std::vector<double> d(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        d[i] = samples[i] - shift;
    const double dmean = pairwise_sum(d.data(), d.size()) / M;
    e.mean = shift + dmean;
    for (double& v : d)
        v = (v - dmean) * (v - dmean);
    const double var = samples.size() > 1 ? pairwise_sum(d.data(), d.size()) / (M - 1.0) : 0.0;
    e.se = std::sqrt(var / M);
    return e;
}

Feedback Feedback::analytic(std::string name, Rule rule)
{
    Feedback f;
    f.name_ = std::move(name);
    f.rule_ = std::move(rule);
    return f;
}

Feedback Feedback::constant(std::string name, const Action& a)
{
    return analytic(std::move(name), [a](double, const Point&) { return a; });
}

std::size_t policy_level(const Grid& grid, double t)
{
    const double r = t / grid.dt();
    const auto n = static_cast<long long>(std::floor(r + 1e-9));
    return static_cast<std::size_t>(std::clamp<long long>(n, 0, static_cast<long long>(grid.nt())));
}

Feedback Feedback::from_policy(std::string name, const Policy& policy, const ActionSet& actions)
{
    if (policy.action_count() != actions.size())
        throw std::invalid_argument("feedback: policy and action set disagree in size");
    return analytic(std::move(name), [policy, actions](double t, const Point& x) {
        const Grid& g = policy.grid();
        return actions[policy.at(policy_level(g, t), g.nearest_node(x))];
    });
}

std::vector<double> simulate_paths(const CoefficientOracle& oracle, const Feedback& feedback, const SimConfig& sim,
                                   std::size_t* exits)
{
    sim.validate();
    std::vector<double> cost(sim.paths);
    std::vector<char> exited(sim.paths, 0);
    const std::size_t steps = sim.steps();
    parallel_for(sim.paths, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            auto rng = path_engine(sim.seed, i);
            const PathResult r = run_path(oracle, feedback, sim.domain, sim.s, sim.x, sim.domain.T(), steps, rng);
            cost[i] = r.cost;
            exited[i] = r.exited;
        }
    });
    if (exits) {
        *exits = 0;
        for (char e : exited)
            *exits += e != 0;
    }
    return cost;
}

MCEstimate simulate_cost(const CoefficientOracle& oracle, const Feedback& feedback, const SimConfig& sim)
{
    const auto start = std::chrono::steady_clock::now();
    std::size_t exits = 0;
    const std::vector<double> cost = simulate_paths(oracle, feedback, sim, &exits);
    MCEstimate e = summarize(cost, sim);
    e.exits = exits;
    e.elapsed = seconds_since(start);
    return e;
}

MCEstimate paired_difference(const CoefficientOracle& oracle, const Feedback& first, const Feedback& second,
                             const SimConfig& sim)
{
    const auto start = std::chrono::steady_clock::now();
    std::size_t e1 = 0, e2 = 0;
    std::vector<double> a = simulate_paths(oracle, first, sim, &e1);
    const std::vector<double> b = simulate_paths(oracle, second, sim, &e2);
    for (std::size_t i = 0; i < a.size(); ++i)
        a[i] -= b[i];
    MCEstimate e = summarize(a, sim);
    e.exits = std::max(e1, e2);
    e.elapsed = seconds_since(start);
    return e;
}

MCEstimate dpp_residual(const Field& u, const CoefficientOracle& oracle, const Feedback& feedback, double t_mid,
                        const SimConfig& sim)
{
    sim.validate();
    if (!(t_mid > sim.s && t_mid < sim.domain.T()))
        throw std::invalid_argument("dpp_residual: t_mid must lie strictly between s and T");
    const auto start = std::chrono::steady_clock::now();
    const std::size_t steps = step_count(t_mid - sim.s, sim.dt_sim);
    const double u0 = u.interpolate(sim.s, sim.x);
    std::vector<double> sample(sim.paths);
    std::vector<char> exited(sim.paths, 0);
    parallel_for(sim.paths, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            auto rng = path_engine(sim.seed, i);
            const PathResult r = run_path(oracle, feedback, sim.domain, sim.s, sim.x, t_mid, steps, rng);
            sample[i] = r.cost + u.interpolate(t_mid, r.end) - u0;
            exited[i] = r.exited;
        }
    });
    MCEstimate e = summarize(sample, sim);
    for (char x : exited)
        e.exits += x != 0;
    e.elapsed = seconds_since(start);
    return e;
}

CostBoundReport cost_bound_check(const CoefficientOracle& oracle, const Grid& grid,
                                 const std::vector<MCEstimate>& estimates)
{
    double phi = 0.0;
    for (std::size_t n = 0; n < grid.time_points(); ++n)
        for (std::size_t node = 0; node < grid.space_points(); ++node)
            phi = std::max(phi, oracle.bound(grid.time(n), grid.point(node)));
    CostBoundReport r;
    r.worst_margin = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const MCEstimate& e = estimates[i];
        const double bound = phi * (e.config.domain.T() - e.config.s);
        r.bound = std::max(r.bound, bound);
        const double margin = std::abs(e.mean) - bound - 3.0 * e.se;
        r.worst_margin = std::max(r.worst_margin, margin);
        if (margin > 0.0) {
            r.passed = false;
            r.offending.push_back(i);
        }
    }
    return r;
}

nlohmann::json estimate_record(const std::string& scenario, const std::string& control, const MCEstimate& e)
{
    return {{"scenario", scenario}, {"control", control}, {"mean", e.mean}, {"se", e.se},
            {"M", e.paths},         {"dt_sim", e.config.dt_sim}, {"seed", e.config.seed}};
}

}  // namespace hjblab
