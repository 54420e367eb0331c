#pragma once

#include "hjblab/grid.hpp"

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hjblab {

/// Actions are real vectors of the state dimension (labels are encoded as reals).
using Action = Point;

struct Coefficients {
    Point drift{};
    double cost = 0.0;
};

using ParamMap = std::map<std::string, std::string>;

double param_double(const ParamMap& params, const std::string& key, double fallback);
std::string param_string(const ParamMap& params, const std::string& key, const std::string& fallback);

/**
 * Ordered finite list of actions, indexed 0..N-1.
 *
 * When `truncated` is set the list is the prefix A^N of an enumerated
 * countable family.
 */
class ActionSet {
public:
    ActionSet() = default;
    /// Throws std::invalid_argument if empty or if two actions coincide.
    ActionSet(std::vector<Action> actions, int dim, bool truncated = false, std::string family = {});

    static ActionSet scalars(const std::vector<double>& values);

    std::size_t size() const { return actions_.size(); }
    const Action& operator[](std::size_t i) const { return actions_[i]; }
    const std::vector<Action>& actions() const { return actions_; }
    int dim() const { return dim_; }
    bool truncated() const { return truncated_; }
    const std::string& family() const { return family_; }

private:
    std::vector<Action> actions_;
    int dim_ = 1;
    bool truncated_ = false;
    std::string family_;
};

/// Prefix of length min(N, |A|), flagged as a truncation. Throws for N < 1.
ActionSet truncate_action_set(const ActionSet& set, std::size_t N);

/// First N members of an enumerated countable family ("bang_bang", "dyadic", "levels").
ActionSet enumerate_family(const std::string& family, std::size_t N);

/// One action per spatial node (1-d), in node order.
ActionSet grid_node_actions(const Grid& grid);

/**
 * Evaluator (t, x, a) -> (b, f) with a dominating bound Phi(t, x).
 *
 * The data may be discontinuous in x: nothing beyond point evaluation is assumed.
 */
class CoefficientOracle {
public:
    using EvalFn = std::function<Coefficients(double, const Point&, const Action&)>;
    using BoundFn = std::function<double(double, const Point&)>;
    using AdmitFn = std::function<bool(const Action&)>;

    CoefficientOracle() = default;
    CoefficientOracle(std::string name, int dim, ParamMap params, EvalFn eval, BoundFn bound,
                      AdmitFn admits, ActionSet default_actions, double lp_exponent);

    const std::string& name() const { return name_; }
    int dim() const { return dim_; }
    const ParamMap& params() const { return params_; }
    const ActionSet& default_actions() const { return default_actions_; }
    /// Integrability exponent p > d + 2 declared for the entry.
    double lp_exponent() const { return lp_exponent_; }

    bool admits(const Action& a) const { return !admits_ || admits_(a); }
    double bound(double t, const Point& x) const { return bound_(t, x); }

    /// Unchecked evaluation for inner loops.
    Coefficients raw(double t, const Point& x, const Action& a) const { return eval_(t, x, a); }

private:
    std::string name_;
    int dim_ = 1;
    ParamMap params_;
    EvalFn eval_;
    BoundFn bound_;
    AdmitFn admits_;
    ActionSet default_actions_;
    double lp_exponent_ = 4.0;
};

/// Checked evaluation: throws std::out_of_range for actions outside the universe, std::logic_error on NaN.
Coefficients eval_coeff(const CoefficientOracle& oracle, double t, const Point& x, const Action& a);

/// Drift (arity dim) and cost fields holding eval at every node.
std::pair<Field, Field> sample_to_grid(const CoefficientOracle& oracle, const Grid& grid, const Action& action);

struct BoundViolation {
    double t = 0.0;
    Point x{};
    std::size_t action = 0;
    double excess = 0.0;
};

struct BoundReport {
    bool passed = true;
    double min_slack = 0.0;
    double max_slack = 0.0;
    std::size_t checked = 0;
    std::vector<BoundViolation> violations;
};

/// Scans |b| + |f| <= Phi at every (node, action).
BoundReport verify_bound(const CoefficientOracle& oracle, const Grid& grid, const ActionSet& actions);

// ---------------------------------------------------------------------------
// Catalog

struct OracleContext {
    int dim = 1;
    double T = 1.0;
};

struct CatalogEntry {
    std::string name;
    std::string description;
    ParamMap defaults;
};

const std::vector<CatalogEntry>& catalog();

/// Builds a named catalog oracle. Throws std::invalid_argument for unknown names or bad parameters.
CoefficientOracle make_oracle(const std::string& name, const ParamMap& params, const OracleContext& ctx);

/// Exact solution of the single-action smooth_baseline problem.
double smooth_baseline_exact(const ParamMap& params, const OracleContext& ctx, double t, const Point& x);

/// Closed forms of the strict-gap example: V = x^2 (T-s) + (T-s)^2.
double counterexample_value(double T, double s, double x);
/// Limit of the mollified values: ((x + T - s)^3 - x^3) / 3 + (T - s)^2.
double counterexample_mollified_value(double T, double s, double x);

/// Nearest-node lookup into tabulated fields, one (drift, cost) pair per action index.
/// Drift fields carry arity dim; actions are the labels 0..N-1.
CoefficientOracle make_tabulated_oracle(std::vector<Field> drift_per_action, std::vector<Field> cost_per_action,
                                        ParamMap params);

}  // namespace hjblab
