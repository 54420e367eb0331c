#pragma once

#include "hjblab/hamiltonian.hpp"
#include "hjblab/linear_parabolic.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace hjblab {

struct HjbOptions {
    ParabolicScheme scheme{};
    double tol = 1e-8;
    std::size_t max_iters = 200;
    /// Stop only when at most this fraction of nodes changed action.
    double policy_change_fraction = 1e-3;
    double slack_delta = 1.0;
    /// Integrability exponent for the slack check (0: dim + 3).
    double lp_exponent = 0.0;
    /// Constant of the adjusted-monotonicity check; calibrated from the iterates when absent.
    std::optional<double> C_monotone;
    /// Policy-freeze sweeps per level in the direct solver.
    std::size_t inner_sweeps = 5;
    bool keep_iterates = false;
};

struct TraceRow {
    std::size_t k = 0;
    double sup_change = 0.0;          // ||u^k - u^{k-1}||_inf
    double monotone_violation = 0.0;  // max (u^k - u^{k-1} - C 2^-k (T - s))^+
    double residual = 0.0;            // sup-norm discrete HJB residual of u^k
    std::size_t policy_changes = 0;   // nodes whose action differs from the previous policy
    double max_increase = 0.0;        // max (u^k - u^{k-1}), no slack
    double slack_gap = 0.0;           // realized minus minimal Hamiltonian of the selector
};

struct IterationTrace {
    std::vector<TraceRow> rows;
    double C = 0.0;
    bool C_calibrated = false;
    bool converged = false;
    /// max over k >= 2 of max_increase: the plain descent u^k <= u^{k-1}.
    double max_descent_violation = 0.0;
    /// max over rows of monotone_violation, k >= 2 when C was calibrated.
    double max_adjusted_violation = 0.0;
    bool slack_satisfied = true;

    std::size_t iterations() const { return rows.size(); }
    void write_csv(std::ostream& out) const;
};

struct PolicyIterationResult {
    Field value;
    Policy policy;
    IterationTrace trace;
    std::vector<Field> iterates;  // u^0, u^1, ... when requested
};

/**
 * Howard iteration: select the argmin policy of the discrete Hamiltonian of
 * u^{k-1} level by level, solve the frozen implicit problem for u^k, stop when
 * the sup change is below tol and the policy is (nearly) unchanged, or when the
 * policy does not change at all. Requires implicit Euler.
 */
PolicyIterationResult policy_iteration(const ActionTable& table, const BoundaryCondition& boundary,
                                       const HjbOptions& options = {}, const Field* u0 = nullptr);

struct DirectResult {
    Field value;
    Policy policy;
    bool converged = true;  // every level's inner loop reached a fixed policy
    std::size_t unconverged_levels = 0;
    std::size_t max_sweeps = 0;
};

/**
 * Backward march: at each level the policy is first chosen from the level
 * above, then frozen, solved implicitly and reselected until it stops changing
 * (at most options.inner_sweeps solves). Requires implicit Euler.
 */
DirectResult solve_hjb_direct(const ActionTable& table, const BoundaryCondition& boundary,
                              const HjbOptions& options = {});

/// Discrete u_s + Lap u + min_a (b . D u + f) at every interior node below T.
Field hjb_residual_field(const Field& u, const ActionTable& table, Advection advection);
/// Sup norm of hjb_residual_field.
double hjb_residual(const Field& u, const ActionTable& table, Advection advection);

/// sup |grad u^k - grad u_final| over nodes at distance >= margin from a box edge, per iterate k >= 1.
std::vector<double> gradient_gaps(const std::vector<Field>& iterates, const Field& final_value, double margin);

}  // namespace hjblab
