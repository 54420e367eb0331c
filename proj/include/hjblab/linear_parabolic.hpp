#pragma once

#include "hjblab/coefficients.hpp"
#include "hjblab/grid.hpp"

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace hjblab {

enum class TimeStepping { implicit_euler, crank_nicolson };
enum class Advection { upwind, central };

struct ParabolicScheme {
    TimeStepping time_stepping = TimeStepping::implicit_euler;
    Advection advection = Advection::upwind;
    /// Only used to judge solver consistency; all solves are direct.
    double tolerance = 1e-10;
};

std::string to_string(TimeStepping t);
std::string to_string(Advection a);
TimeStepping time_stepping_from_string(const std::string& s);
Advection advection_from_string(const std::string& s);

/**
 * Boundary data: periodic on the torus, Dirichlet values g(t, x) on the box.
 */
class BoundaryCondition {
public:
    enum class Kind { periodic, dirichlet_exact };
    using ValueFn = std::function<double(double, const Point&)>;

    static BoundaryCondition periodic();
    static BoundaryCondition dirichlet(ValueFn g, std::string name = "custom");

    /// Periodic on a torus, zero Dirichlet data on a box.
    static BoundaryCondition natural(const Grid& grid);

    Kind kind() const { return kind_; }
    const std::string& name() const { return name_; }
    double value(double t, const Point& x) const { return g_ ? g_(t, x) : 0.0; }

    /// Throws std::invalid_argument when the kind does not fit the grid.
    void validate(const Grid& grid) const;

private:
    Kind kind_ = Kind::periodic;
    std::string name_ = "periodic";
    ValueFn g_;
};

/**
 * Named Dirichlet data for box scenarios: "zero", "counterexample_value",
 * "counterexample_mollified", "counterexample_lower" (pointwise min of the two).
 * Throws std::invalid_argument for unknown names.
 */
BoundaryCondition named_boundary(const std::string& name, double T);

/// Coefficients of one row of the discrete generator L = Laplacian + b . grad.
struct RowStencil {
    double centre = 0.0;
    std::array<double, kMaxDim> lower{};  // weight on the node at offset -1 along each axis
    std::array<double, kMaxDim> upper{};  // weight on the node at offset +1
};

RowStencil row_stencil(const Grid& grid, const Point& drift, Advection advection);

/// (L u)(node) at one level, `u` holding a single level.
double apply_generator(const Grid& grid, std::span<const double> u, std::size_t node, const RowStencil& row);

/// Per-node drift and cost of one time level.
struct LevelCoefficients {
    std::vector<Point> drift;
    std::vector<double> cost;

    explicit LevelCoefficients(std::size_t nodes = 0) : drift(nodes), cost(nodes, 0.0) {}
    static LevelCoefficients from_fields(const Field& drift, const Field& cost, std::size_t n);
};

/**
 * One backward step of the theta scheme
 *   (I - theta dt L_n) u_n = u_{n+1} + dt [theta f_n + (1 - theta)(L_{n+1} u_{n+1} + f_{n+1})]
 * with boundary rows u_n = g(t_n, x). The 1-d box uses the Thomas algorithm, the
 * 1-d torus a cyclic (Sherman-Morrison) solve, and everything else a sparse LU
 * factorization of the full level system.
 */
class BackwardStepper {
public:
    BackwardStepper(const Grid& grid, BoundaryCondition boundary, ParabolicScheme scheme);
    ~BackwardStepper();
    BackwardStepper(BackwardStepper&&) noexcept;
    BackwardStepper& operator=(BackwardStepper&&) noexcept;

    const Grid& grid() const { return grid_; }
    const ParabolicScheme& scheme() const { return scheme_; }
    const BoundaryCondition& boundary() const { return boundary_; }

    /// `next` may be null for implicit Euler.
    void step(std::size_t n, const LevelCoefficients& now, const LevelCoefficients* next,
              std::span<const double> u_next, std::span<double> u_now);

    /// False once any assembled level had a positive off-diagonal or a negative explicit weight.
    bool monotone() const { return monotone_; }

private:
    struct Sparse;
    Grid grid_;
    BoundaryCondition boundary_;
    ParabolicScheme scheme_;
    bool monotone_ = true;
    std::vector<RowStencil> rows_;
    std::vector<double> rhs_, lo_, di_, up_, work_a_, work_b_, work_c_;
    std::unique_ptr<Sparse> sparse_;
};

/**
 * Solves u_s + Lap u + b . grad u + f = 0 backward from u(T) = 0 with the given
 * frozen drift (arity dim) and cost fields.
 */
Field solve_frozen(const Field& drift, const Field& cost, const BoundaryCondition& boundary,
                   const ParabolicScheme& scheme = {});

/**
 * Discrete u_s + Lap u + b . grad u + f with the solver's stencils; zero at the
 * terminal level and at box boundary nodes.
 */
Field pde_residual(const Field& u, const Field& drift, const Field& cost, const ParabolicScheme& scheme = {});

/// True when every level matrix is an M-matrix (and the explicit part of Crank-Nicolson is nonnegative).
bool scheme_is_monotone(const Field& drift, const ParabolicScheme& scheme);

/// Single-action problem with a closed-form solution.
struct ClosedFormProblem {
    CoefficientOracle oracle;
    Action action{};
    std::function<double(double, const Point&)> exact;
    std::function<BoundaryCondition(const Grid&)> boundary;
};

struct OrderReport {
    std::vector<double> dx, space_errors;
    std::vector<double> dt, time_errors;
    double space_order = 0.0;
    double time_order = 0.0;
    /// Every error below 1e-12: orders are meaningless and left at zero.
    bool skipped = false;
};

/// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

/**
 * Sup-norm errors against the closed form along a space ladder and a time
 * ladder (each at least three grids) and the fitted orders.
 */
OrderReport convergence_order(const ClosedFormProblem& problem, const std::vector<Grid>& space_ladder,
                              const std::vector<Grid>& time_ladder, const ParabolicScheme& scheme);

}  // namespace hjblab
