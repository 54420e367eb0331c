#pragma once

#include "hjblab/coefficients.hpp"
#include "hjblab/grid.hpp"
#include "hjblab/hamiltonian.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hjblab {

/**
 * Euler-Maruyama run parameters. `domain` supplies T and the wrap rule: torus
 * paths are wrapped, box paths may leave the box, in which case feedback and
 * coefficients are read at the nearest point of the box and the exit is counted.
 */
struct SimConfig {
    std::size_t paths = 10000;
    double dt_sim = 1e-3;
    std::uint64_t seed = 1;
    double s = 0.0;
    Point x{};
    Grid domain;

    /// Throws std::invalid_argument unless M >= 1, 0 < dt_sim <= T - s and x lies in the domain.
    void validate() const;
    /// Number of Euler steps, round((T - s) / dt_sim), at least one.
    std::size_t steps() const;
    nlohmann::json to_json() const;
};

struct MCEstimate {
    double mean = 0.0;
    double se = 0.0;
    std::size_t paths = 0;
    std::size_t exits = 0;  // box paths that left the domain at some step
    double elapsed = 0.0;   // seconds, not part of any numeric artifact
    SimConfig config;

    double lower(double z = 3.0) const { return mean - z * se; }
    double upper(double z = 3.0) const { return mean + z * se; }
};

/// Mean and standard error (sample std / sqrt M) of per-path samples, summed pairwise.
MCEstimate summarize(const std::vector<double>& samples, const SimConfig& config);

/**
 * A feedback law (t, x) -> action. Grid policies use the nearest spatial node
 * and the time level t_n with t_n <= t < t_{n+1}.
 */
class Feedback {
public:
    using Rule = std::function<Action(double, const Point&)>;

    Feedback() = default;
    static Feedback analytic(std::string name, Rule rule);
    static Feedback constant(std::string name, const Action& a);
    static Feedback from_policy(std::string name, const Policy& policy, const ActionSet& actions);

    const std::string& name() const { return name_; }
    Action operator()(double t, const Point& x) const { return rule_(t, x); }

private:
    std::string name_;
    Rule rule_;
};

/// Time level of a grid policy used at time t.
std::size_t policy_level(const Grid& grid, double t);

/// Per-path running costs of one run; sample i depends only on (seed, i).
std::vector<double> simulate_paths(const CoefficientOracle& oracle, const Feedback& feedback, const SimConfig& sim,
                                   std::size_t* exits = nullptr);

/// J(feedback; s, x) = E int_s^T f(t, X_t, a_t) dt with left-endpoint quadrature.
MCEstimate simulate_cost(const CoefficientOracle& oracle, const Feedback& feedback, const SimConfig& sim);

/// Common-random-number estimate of J(first) - J(second).
MCEstimate paired_difference(const CoefficientOracle& oracle, const Feedback& first, const Feedback& second,
                             const SimConfig& sim);

/// E[int_s^t_mid f dr + u(t_mid, X_t_mid)] - u(s, x). Throws std::invalid_argument unless s < t_mid < T.
MCEstimate dpp_residual(const Field& u, const CoefficientOracle& oracle, const Feedback& feedback, double t_mid,
                        const SimConfig& sim);

struct CostBoundReport {
    bool passed = true;
    double bound = 0.0;         // sup Phi over the sampled domain times (T - s)
    double worst_margin = 0.0;  // max of |mean| - bound - 3 SE, <= 0 when passed
    std::vector<std::size_t> offending;
};

/// |J| <= sup Phi (T - s) + 3 SE for every estimate, Phi sampled at every node of `grid`.
CostBoundReport cost_bound_check(const CoefficientOracle& oracle, const Grid& grid,
                                 const std::vector<MCEstimate>& estimates);

/// {scenario, control, mean, se, M, dt_sim, seed}
nlohmann::json estimate_record(const std::string& scenario, const std::string& control, const MCEstimate& e);

}  // namespace hjblab
