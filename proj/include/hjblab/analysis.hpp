#pragma once

#include "hjblab/hjb_solver.hpp"
#include "hjblab/mollifier.hpp"
#include "hjblab/sde_montecarlo.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hjblab {

/// 5 (dx^2 + dt + dt_sim) on the value grid.
double discretization_tolerance(const Grid& grid, double dt_sim = 0.0);

// ---------------------------------------------------------------------------
// Verification

struct VerificationRow {
    std::string control;
    bool argmin = false;
    MCEstimate estimate;
    MCEstimate excess;    // J(control) - J(argmin) with common random numbers
    double margin = 0.0;  // slack of the row's inequality, >= 0 when it holds
    bool passed = true;
};

struct VerificationReport {
    double u = 0.0;                 // value at the start point
    double lower_tolerance = 0.0;   // 5 (dx^2 + dt)
    double argmin_tolerance = 0.0;  // 5 (dx^2 + dt + dt_sim)
    std::vector<VerificationRow> rows;
    bool passed = true;

    nlohmann::json to_json() const;
};

/**
 * J_MC(a) >= u(s, x) - 3 SE - lower_tolerance for every candidate, and
 * |J_MC(argmin) - u(s, x)| <= 3 SE + argmin_tolerance for the argmin feedback.
 */
VerificationReport verification_check(const Field& u, const CoefficientOracle& oracle, const SimConfig& sim,
                                      const std::vector<Feedback>& candidates, const Feedback& argmin);

/**
 * `count` fixed controls: the constant actions first, then grid policies with
 * actions drawn per (level block, node) from a seeded generator.
 */
std::vector<Feedback> candidate_feedbacks(const ActionSet& actions, const Grid& grid, std::size_t count,
                                          std::uint64_t seed);

struct DppRow {
    double t_mid = 0.0;
    MCEstimate optimal;     // residual under the argmin feedback
    MCEstimate suboptimal;  // residual under the comparison control
    bool optimal_passed = true;
    bool suboptimal_detected = true;  // residual > 3 SE
};

struct DppReport {
    double tolerance = 0.0;
    std::vector<DppRow> rows;
    bool passed = true;
    nlohmann::json to_json() const;
};

/// dpp_residual at every t_mid for the argmin feedback and for a suboptimal control.
DppReport dpp_battery(const Field& u, const CoefficientOracle& oracle, const Feedback& argmin,
                      const Feedback& suboptimal, const std::vector<double>& t_mids, const SimConfig& sim);

// ---------------------------------------------------------------------------
// Mollification sweeps

struct SweepSpec {
    std::string scenario;
    CoefficientOracle oracle;
    ActionSet actions;
    Grid grid;
    std::vector<double> eps;  // strictly decreasing
    HjbOptions options;
    BoundaryCondition boundary;
    /// Boundary data for the mollified problems; `boundary` when unset.
    std::optional<BoundaryCondition> mollified_boundary;
    std::size_t per_eps = 8;
    double probe_s = 0.0;
    Point probe_x{};
    /// Closed forms at the probe point, reported next to the numbers when present.
    std::function<double(double, const Point&)> exact_value;
    std::function<double(double, const Point&)> exact_limit;
};

struct SweepRung {
    double eps = 0.0;
    bool resolved = true;
    Field value;  // V_eps
    Field gap;    // V_eps - V
    // Statistics over spatially interior nodes with eps <= t < T, where the zero
    // extension of the data in time does not reach the value.
    double sup_gap = 0.0;
    double lp_gap = 0.0;
    double min_gap = 0.0;
    double max_gap = 0.0;
    double negative_fraction = 0.0;  // nodes with gap < -tolerance
    double full_sup_gap = 0.0;       // over all levels below T
    double probe_gap = 0.0;
    double probe_value = 0.0;
};

struct SweepReport {
    std::string scenario;
    Field base;  // V
    double base_probe = 0.0;
    double tolerance = 0.0;  // 5 dx, shared by the liminf and convergence checks
    std::vector<SweepRung> rungs;
    /// "pass", "oscillation" (only one of the two smallest rungs holds) or "fail".
    std::string liminf_status;
    bool liminf_passed = false;
    bool gaps_decreasing = false;
    bool converges = false;
    /// Smaller probe gap of the two smallest rungs.
    double persistent_gap = 0.0;
    std::optional<double> exact_value_probe;
    std::optional<double> exact_limit_probe;

    const SweepRung& smallest() const;
    nlohmann::json summary() const;
    /// Columns t, x[, y], then gap_<eps> for every resolved rung.
    void write_gap_csv(std::ostream& out) const;
};

/**
 * Solves the unmollified problem and, for every resolved eps, the problem with
 * coefficients mollified per action; unresolved rungs are refused (kept with
 * resolved = false and no fields).
 */
SweepReport mollify_value_sweep(const SweepSpec& spec);

// ---------------------------------------------------------------------------
// Strict-gap example

struct CounterexampleSample {
    double s = 0.0;
    double x = 0.0;
    double exact_value = 0.0;
    double numeric_value = 0.0;
    double exact_limit = 0.0;
    double numeric_limit = 0.0;
    double exact_gap = 0.0;
    double numeric_gap = 0.0;
    double contamination = 0.0;
    std::optional<MCEstimate> mc_value;
    std::optional<MCEstimate> mc_limit;
};

struct CounterexampleReport {
    double T = 1.0;
    Grid grid;
    std::vector<CounterexampleSample> samples;
    double contamination = 0.0;  // max over samples of |u(box) - u(enlarged box)|
    double contamination_tolerance = 0.0;
    std::string advice;
    double origin_gap = 0.0;
    double required_gap = 0.3;
    bool cross_check_passed = true;
    bool passed = false;
    double elapsed = 0.0;

    nlohmann::json to_json() const;
    void write_csv(std::ostream& out) const;
};

/**
 * V from the effective Hamiltonian H = x^2 and the mollified limit from
 * H = p + x^2, both solved on `grid` (a 1-d box) with exact Dirichlet data,
 * compared with the closed forms at each (s, x) sample. A second solve on a box
 * enlarged by 2 on each side estimates boundary contamination. With `sim`, every
 * sample with s < T is cross-checked by Monte Carlo. The gap at (0, 0) decides
 * the verdict whether or not it is among the samples.
 */
CounterexampleReport counterexample_report(double T, const std::vector<std::pair<double, double>>& samples,
                                           const Grid& grid, const std::optional<SimConfig>& sim,
                                           double contamination_tolerance = 1e-3, double required_gap = 0.3);

// ---------------------------------------------------------------------------
// Countable action sets

struct TruncationSpec {
    std::string scenario;
    CoefficientOracle oracle;
    std::string family;
    std::vector<std::size_t> N_list;  // increasing
    Grid grid;
    std::vector<double> eps;  // strictly decreasing
    HjbOptions options;
    BoundaryCondition boundary;
    std::size_t per_eps = 8;
    /// Open-loop comparison J_eps(a_1) - J(a_1) with common random numbers; skipped when unset.
    std::optional<SimConfig> sim;
};

struct TruncationRow {
    std::size_t N = 0;
    Field value;                  // V^N
    std::vector<double> sup_gap;  // sup |V_eps^N - V^N| over t >= eps, per eps
    bool eps_decreasing = false;
};

struct TruncationReport {
    std::string scenario;
    std::vector<double> eps;
    std::vector<TruncationRow> rows;
    double tolerance = 0.0;
    bool nonincreasing_in_N = false;
    bool strict_somewhere = false;
    bool eps_converges = false;  // every N: gaps decreasing and below tolerance at eps_min
    std::vector<MCEstimate> open_loop;  // per eps
    bool open_loop_decreasing = true;
    bool passed = false;

    nlohmann::json to_json() const;
};

TruncationReport countable_truncation_study(const TruncationSpec& spec);

}  // namespace hjblab
