#pragma once

#include "hjblab/coefficients.hpp"
#include "hjblab/grid.hpp"
#include "hjblab/linear_parabolic.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hjblab {

struct HamValue {
    double value = 0.0;
    std::size_t index = 0;
};

/// min over the list of b(t,x,a).p + f(t,x,a); ties go to the lowest index.
HamValue ham_min(const CoefficientOracle& oracle, const ActionSet& actions, double t, const Point& x, const Point& p);

/// Action index per space-time node.
class Policy {
public:
    Policy() = default;
    Policy(const Grid& grid, std::size_t action_count, std::uint32_t fill = 0);

    const Grid& grid() const { return grid_; }
    std::size_t action_count() const { return action_count_; }
    std::uint32_t at(std::size_t n, std::size_t node) const { return index_[n * grid_.space_points() + node]; }
    void set(std::size_t n, std::size_t node, std::uint32_t a);
    std::span<const std::uint32_t> level(std::size_t n) const;

    /// Nodes (over all levels) where the two policies differ.
    std::size_t differences(const Policy& other) const;
    std::size_t size() const { return index_.size(); }

private:
    Grid grid_;
    std::size_t action_count_ = 1;
    std::vector<std::uint32_t> index_;
};

/// Slack C_k(x) = 2^-k (1 + |x|^2)^-delta.
class SlackSchedule {
public:
    /// Throws std::invalid_argument unless delta > dim / (2 p).
    SlackSchedule(double delta, int dim, double p);

    double delta() const { return delta_; }
    double value(int k, const Point& x) const;

private:
    double delta_;
    int dim_;
};

/**
 * Drift and cost of every action sampled on one grid. Also the carrier of
 * effective Hamiltonians given as a short list of (drift, cost) pieces.
 */
class ActionTable {
public:
    ActionTable() = default;

    /// Samples every listed action at every node (in parallel over actions and levels).
    static ActionTable sample(const CoefficientOracle& oracle, const ActionSet& actions, const Grid& grid);
    /// One (drift, cost) field pair per action; drift arity = dim.
    static ActionTable from_fields(std::string name, std::vector<Field> drift, std::vector<Field> cost);

    const std::string& name() const { return name_; }
    const Grid& grid() const { return cost_.front().grid(); }
    std::size_t size() const { return cost_.size(); }
    const Field& drift(std::size_t a) const { return drift_[a]; }
    const Field& cost(std::size_t a) const { return cost_[a]; }
    Point drift_at(std::size_t a, std::size_t n, std::size_t node) const { return drift_[a].vector_at(n, node); }
    double cost_at(std::size_t a, std::size_t n, std::size_t node) const { return cost_[a].at(n, node); }

    /// Drift and cost of the policy's actions at level n.
    LevelCoefficients level(const Policy& policy, std::size_t n) const;
    /// Full drift and cost fields under a policy.
    std::pair<Field, Field> frozen(const Policy& policy) const;

    /// Largest drift magnitude over all actions and nodes.
    double drift_sup() const;
    /// Subset of actions by index, in the given order.
    ActionTable subset(const std::vector<std::size_t>& indices) const;

private:
    std::string name_;
    std::vector<Field> drift_;
    std::vector<Field> cost_;
};

/// Relative width of the tie band used by the discrete selector.
inline constexpr double kTieTolerance = 1e-11;

/**
 * Discrete Hamiltonian at one node of a level: min over actions of
 * sum_i [b_i^+ D^+_i u - b_i^- D^-_i u] + f (upwind) or b . D^0 u + f (central),
 * which is exactly the action-dependent part of the solver's generator.
 * Actions within kTieTolerance (1 + |min|) of the minimum are ties; the lowest
 * index among them is returned together with the exact minimum.
 */
HamValue discrete_ham_min(const ActionTable& table, std::span<const double> u, std::size_t n, std::size_t node,
                          Advection advection);

/// Value of the discrete Hamiltonian for one given action.
double discrete_ham_value(const ActionTable& table, std::span<const double> u, std::size_t n, std::size_t node,
                          std::size_t action, Advection advection);

/// Argmin policy of one level of u, written into `policy`; returns the number of changed nodes.
std::size_t select_level(const ActionTable& table, std::span<const double> u, std::size_t n, Advection advection,
                         Policy& policy);

/// Argmin policy at every level of u.
Policy select_policy(const ActionTable& table, const Field& u, Advection advection);

/**
 * Pointwise selector from a gradient field (arity dim): exact argmin of
 * b . grad + f at every node. A slack schedule, if given, is only checked
 * (the exact argmin satisfies every schedule) and never exploited.
 */
Policy select_policy(const Field& grad, const CoefficientOracle& oracle, const ActionSet& actions,
                     const std::optional<SlackSchedule>& slack = std::nullopt, int k = 0);

struct SlackCheck {
    bool passed = true;
    double max_excess = 0.0;  // max of realized - min - C_k(x), <= 0 when passed
    double max_gap = 0.0;     // max of realized - min
};

/// Checks realized discrete Hamiltonian of `policy` against the minimum plus C_k at every node below T.
SlackCheck verify_slack(const ActionTable& table, const Field& u, const Policy& policy, Advection advection,
                        const SlackSchedule& schedule, int k);

}  // namespace hjblab
