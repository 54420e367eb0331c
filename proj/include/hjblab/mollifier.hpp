#pragma once

#include "hjblab/coefficients.hpp"
#include "hjblab/grid.hpp"

#include <memory>
#include <vector>

namespace hjblab {

/**
 * Space-time bump kernel zeta_eps(t, x) = eps^-(d+1) zeta(t/eps, x/eps) with
 * zeta(r) = c exp(-1 / (1 - r^2)) on the unit ball of R^(1+d), zero outside,
 * and c chosen so that zeta integrates to one.
 */
class MollifierKernel {
public:
    /// Throws std::invalid_argument for eps <= 0 or dim outside {1, 2}.
    MollifierKernel(double eps, int dim);

    double eps() const { return eps_; }
    int dim() const { return dim_; }
    /// Normalization constant c of the unit-scale profile.
    double normalization() const { return norm_; }

    /// Unit-scale kernel zeta(t, x).
    double unit_value(double t, const Point& x) const;
    /// Scaled kernel zeta_eps(t, x); exactly zero for |(t, x)| >= eps.
    double value(double t, const Point& x) const;

    /// Riemann sum of zeta_eps over a lattice of spacing eps / per_eps in every direction.
    double lattice_integral(std::size_t per_eps) const;

private:
    double eps_;
    int dim_;
    double norm_;
};

/// Time-space offsets with weights summing to exactly one.
struct QuadratureStencil {
    std::vector<double> dt;
    std::vector<Point> dx;
    std::vector<double> weight;
    std::size_t size() const { return weight.size(); }
};

/// Grid-aligned offsets (m dt, j dx) inside the eps-ball, kernel weights renormalized to sum 1.
QuadratureStencil grid_stencil(const MollifierKernel& kernel, const Grid& grid);

/// Cell-centered offsets ((m + 1/2) h, (j + 1/2) h), h = eps / per_eps, renormalized to sum 1.
QuadratureStencil cell_stencil(const MollifierKernel& kernel, std::size_t per_eps);

/// True when eps is at least one grid step in time and in every space direction.
bool resolves(const Grid& grid, double eps);

/**
 * Discrete convolution of a sampled field with the kernel on its own grid:
 * zero extension outside [0, T] in time, periodic wrap on the torus, zero
 * extension outside the box.
 */
Field mollify_field(const Field& field, const MollifierKernel& kernel);

/**
 * Oracle whose eval returns (zeta_eps * b(., ., a), zeta_eps * f(., ., a)) at any
 * point, computed by the cell-centered stencil. `domain` fixes the time
 * interval [0, T] for zero extension and the spatial wrap/zero-extension rule.
 */
CoefficientOracle mollify_oracle(const CoefficientOracle& oracle, const MollifierKernel& kernel, const Grid& domain,
                                 std::size_t per_eps = 8);

struct LadderRung {
    double eps = 0.0;
    Field drift;  // b_eps on the working grid
    Field cost;   // f_eps on the working grid
    double drift_distance = 0.0;           // ||b_eps - b||_p over the cylinder
    double cost_distance = 0.0;            // ||f_eps - f||_p over the cylinder
    double drift_distance_interior = 0.0;  // restricted to t in [eps_max, T - eps_max]
    double cost_distance_interior = 0.0;
    double drift_sup = 0.0;  // ||b_eps||_inf
    double cost_sup = 0.0;   // ||f_eps||_inf
};

struct LadderReport {
    double p = 0.0;
    Grid quadrature_grid;
    std::vector<LadderRung> rungs;
};

/**
 * Mollified coefficients for each eps (strictly decreasing, each resolved by
 * `grid`), with L^p distances to the raw data measured on a quadrature grid at
 * least four times finer than the smallest eps. Throws std::invalid_argument
 * for unsorted or unresolved ladders.
 */
LadderReport coefficient_ladder(const CoefficientOracle& oracle, const Action& action, const Grid& grid,
                                const std::vector<double>& eps_list, double p = 0.0);

}  // namespace hjblab
