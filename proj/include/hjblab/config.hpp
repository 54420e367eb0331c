#pragma once

#include "hjblab/coefficients.hpp"
#include "hjblab/hjb_solver.hpp"
#include "hjblab/sde_montecarlo.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace hjblab {

/// Every problem found while reading a config, each prefixed by its field path.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> issues);
    const std::vector<std::string>& issues() const { return issues_; }

private:
    std::vector<std::string> issues_;
};

struct DomainSpec {
    DomainKind kind = DomainKind::torus;
    int dim = 1;
    std::vector<Interval> extent{{-1.0, 1.0}};
    std::vector<std::size_t> nx{64};
};

struct TimeSpec {
    double T = 1.0;
    std::size_t nt = 128;
};

/// default: the oracle's own list; list: explicit actions; family: first N of a family; grid_nodes: one per node.
struct ActionsSpec {
    std::string mode = "default";
    std::vector<Action> list;
    std::string family;
    std::size_t N = 1;
};

struct CoefficientSpec {
    std::string oracle = "bang_bang";
    ParamMap params;
    /// "sampled", or "strict_gap" to solve with the effective Hamiltonian x^2 of the strict-gap example.
    std::string hamiltonian = "sampled";
};

struct SolverSpec {
    TimeStepping time_stepping = TimeStepping::implicit_euler;
    Advection advection = Advection::upwind;
    double tol = 1e-8;
    std::size_t max_iters = 200;
    double slack_delta = 1.0;
    std::optional<double> C_monotone;  // "auto" when unset
    std::size_t inner_sweeps = 5;
    std::string boundary = "natural";  // periodic, natural or a named Dirichlet datum
};

struct MollifySpec {
    std::vector<double> eps{0.4, 0.2, 0.1, 0.05};
    std::string kernel = "bump";
    std::size_t per_eps = 8;
    std::string boundary;            // empty: same as the solver
    std::string mollified_boundary;  // empty: same as `boundary`
    std::string actions = "inherit";  // or grid_nodes
    std::vector<Interval> extent;     // empty: the scenario domain
    std::vector<std::size_t> nx;
    std::size_t nt = 0;  // 0: the scenario's nt
};

struct McSpec {
    std::size_t M = 20000;
    double dt_sim = 1e-3;
    std::uint64_t seed = 1;
    double s = 0.0;
    Point x{};
};

struct ExperimentSpec {
    std::vector<double> t_mid{0.25, 0.5, 0.75};
    std::vector<std::pair<double, double>> samples{{0.0, 0.0}};
    std::vector<std::size_t> N_list{1, 2, 4};
    std::string family = "dyadic";
    std::size_t candidates = 5;
    /// Control for `simulate` and the argmin feedback everywhere: "argmin", "follow" (a = x) or "constant".
    std::string control = "argmin";
    Action constant_action{};
    Action suboptimal{1.0, 0.0};
    /// Mollification verdict: "converge" or "gap".
    std::string expect = "converge";
    double required_gap = 0.3;
    double probe_s = 0.0;
    Point probe_x{};
    double contamination_tolerance = 1e-3;
    bool mc_cross_check = true;
    std::optional<double> expected_mean;
};

struct ScenarioConfig {
    std::string name;
    std::string description;
    DomainSpec domain;
    TimeSpec time;
    ActionsSpec actions;
    CoefficientSpec coefficients;
    SolverSpec solver;
    MollifySpec mollify;
    McSpec mc;
    ExperimentSpec experiment;
    std::string origin;  // file path or builtin:<name>
    std::vector<std::string> warnings;

    Grid grid() const;
    Grid mollify_grid() const;
    CoefficientOracle oracle() const;
    ActionSet action_set(const Grid& grid) const;
    /// Table the HJB solvers run on (the effective Hamiltonian in strict_gap mode).
    ActionTable action_table(const Grid& grid) const;
    HjbOptions hjb_options() const;
    BoundaryCondition boundary(const Grid& grid) const;
    BoundaryCondition boundary_named(const std::string& name, const Grid& grid) const;
    SimConfig sim(const Grid& grid) const;

    /// Canonical INI text with every value explicit; loading it yields the same config.
    std::string to_ini() const;
    nlohmann::json to_json() const;
    std::uint64_t hash() const;
};

/// Parses INI text. Throws ConfigError listing every syntax or semantic problem.
ScenarioConfig parse_config(const std::string& text, const std::string& origin = "<string>");
/// Reads and parses a file; referenced tabulated files must exist.
ScenarioConfig load_config(const std::string& path);
/// A path when one exists, else a built-in scenario name.
ScenarioConfig resolve_config(const std::string& path_or_name);

const std::vector<std::string>& builtin_scenarios();
/// Throws std::invalid_argument for unknown names.
const std::string& builtin_scenario_text(const std::string& name);

std::uint64_t fnv1a(std::string_view text);
std::string hex64(std::uint64_t v);

}  // namespace hjblab
