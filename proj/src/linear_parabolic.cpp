#include "hjblab/linear_parabolic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace hjblab {

std::string to_string(TimeStepping t) { return t == TimeStepping::implicit_euler ? "implicit_euler" : "crank_nicolson"; }
std::string to_string(Advection a) { return a == Advection::upwind ? "upwind" : "central"; }

TimeStepping time_stepping_from_string(const std::string& s)
{
    if (s == "implicit_euler")
        return TimeStepping::implicit_euler;
    if (s == "crank_nicolson")
        return TimeStepping::crank_nicolson;
    throw std::invalid_argument("unknown time stepping '" + s + "'");
}

Advection advection_from_string(const std::string& s)
{
    if (s == "upwind")
        return Advection::upwind;
    if (s == "central")
        return Advection::central;
    throw std::invalid_argument("unknown advection '" + s + "'");
}

// ---------------------------------------------------------------------------

BoundaryCondition BoundaryCondition::periodic() { return {}; }

BoundaryCondition BoundaryCondition::dirichlet(ValueFn g, std::string name)
{
    BoundaryCondition bc;
    bc.kind_ = Kind::dirichlet_exact;
    bc.g_ = std::move(g);
    bc.name_ = std::move(name);
    return bc;
}

BoundaryCondition BoundaryCondition::natural(const Grid& grid)
{
    if (grid.is_torus())
        return periodic();
    return dirichlet([](double, const Point&) { return 0.0; }, "zero");
}

void BoundaryCondition::validate(const Grid& grid) const
{
    if (grid.is_torus() && kind_ != Kind::periodic)
        throw std::invalid_argument("boundary: Dirichlet data given on a torus");
    if (!grid.is_torus() && kind_ != Kind::dirichlet_exact)
        throw std::invalid_argument("boundary: periodic condition given on a box");
}

BoundaryCondition named_boundary(const std::string& name, double T)
{
    if (name == "zero")
        return BoundaryCondition::dirichlet([](double, const Point&) { return 0.0; }, name);
    if (name == "counterexample_value")
        return BoundaryCondition::dirichlet([T](double t, const Point& x) { return counterexample_value(T, t, x[0]); },
                                            name);
    if (name == "counterexample_mollified")
        return BoundaryCondition::dirichlet(
            [T](double t, const Point& x) { return counterexample_mollified_value(T, t, x[0]); }, name);
    if (name == "counterexample_lower")
        return BoundaryCondition::dirichlet(
            [T](double t, const Point& x) {
                return std::min(counterexample_value(T, t, x[0]), counterexample_mollified_value(T, t, x[0]));
            },
            name);
    throw std::invalid_argument("unknown boundary data '" + name + "'");
}

// ---------------------------------------------------------------------------

RowStencil row_stencil(const Grid& grid, const Point& drift, Advection advection)
{
    RowStencil r;
    for (int a = 0; a < grid.dim(); ++a) {
        const double h = grid.dx(a);
        const double diff = 1.0 / (h * h);
        const double b = drift[a];
        if (advection == Advection::upwind) {
            r.lower[a] = diff + std::max(-b, 0.0) / h;
            r.upper[a] = diff + std::max(b, 0.0) / h;
        } else {
            r.lower[a] = diff - 0.5 * b / h;
            r.upper[a] = diff + 0.5 * b / h;
        }
        r.centre -= r.lower[a] + r.upper[a];
    }
    return r;
}

double apply_generator(const Grid& grid, std::span<const double> u, std::size_t node, const RowStencil& row)
{
    double v = row.centre * u[node];
    for (int a = 0; a < grid.dim(); ++a)
        v += row.lower[a] * u[grid.neighbour(node, a, -1)] + row.upper[a] * u[grid.neighbour(node, a, 1)];
    return v;
}

LevelCoefficients LevelCoefficients::from_fields(const Field& drift, const Field& cost, std::size_t n)
{
    const Grid& g = cost.grid();
    if (drift.arity() != static_cast<std::size_t>(g.dim()) || !drift.grid().same_shape(g))
        throw std::invalid_argument("level coefficients: drift must have arity dim on the cost grid");
    LevelCoefficients lc(g.space_points());
    for (std::size_t node = 0; node < g.space_points(); ++node) {
        lc.drift[node] = drift.vector_at(n, node);
        lc.cost[node] = cost.at(n, node);
    }
    return lc;
}

// ---------------------------------------------------------------------------

namespace {

void thomas(std::span<const double> lo, std::span<const double> di, std::span<const double> up,
            std::span<double> x, std::vector<double>& scratch)
{
    const std::size_t n = di.size();
    scratch.resize(n);
    double beta = di[0];
    x[0] /= beta;
    for (std::size_t i = 1; i < n; ++i) {
        scratch[i] = up[i - 1] / beta;
        beta = di[i] - lo[i] * scratch[i];
        if (beta == 0.0)
            throw std::logic_error("tridiagonal solve: zero pivot");
        x[i] = (x[i] - lo[i] * x[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;)
        x[i] -= scratch[i + 1] * x[i + 1];
}

/// lo[0] is the corner entry in row 0 (column n-1), up[n-1] the corner in row n-1 (column 0).
void cyclic(std::span<const double> lo, std::span<const double> di, std::span<const double> up,
            std::span<double> x, std::vector<double>& bb, std::vector<double>& z, std::vector<double>& scratch)
{
    const std::size_t n = di.size();
    const double top_right = lo[0];
    const double bottom_left = up[n - 1];
    const double gamma = -di[0];
    bb.assign(di.begin(), di.end());
    bb[0] = di[0] - gamma;
    bb[n - 1] = di[n - 1] - bottom_left * top_right / gamma;
    thomas(lo, bb, up, x, scratch);
    z.assign(n, 0.0);
    z[0] = gamma;
    z[n - 1] = bottom_left;
    thomas(lo, bb, up, z, scratch);
    const double fact = (x[0] + top_right * x[n - 1] / gamma) / (1.0 + z[0] + top_right * z[n - 1] / gamma);
    for (std::size_t i = 0; i < n; ++i)
        x[i] -= fact * z[i];
}

}  // namespace

struct BackwardStepper::Sparse {
    Eigen::SparseMatrix<double> A;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    std::vector<Eigen::Triplet<double>> triplets;
    bool analyzed = false;
};

BackwardStepper::BackwardStepper(const Grid& grid, BoundaryCondition boundary, ParabolicScheme scheme)
    : grid_(grid), boundary_(std::move(boundary)), scheme_(scheme)
{
    boundary_.validate(grid_);
    rows_.resize(grid_.space_points());
    rhs_.resize(grid_.space_points());
    const bool banded = grid_.dim() == 1 && (!grid_.is_torus() || grid_.nx(0) >= 3);
    if (!banded)
        sparse_ = std::make_unique<Sparse>();
}

BackwardStepper::~BackwardStepper() = default;
BackwardStepper::BackwardStepper(BackwardStepper&&) noexcept = default;
BackwardStepper& BackwardStepper::operator=(BackwardStepper&&) noexcept = default;

void BackwardStepper::step(std::size_t n, const LevelCoefficients& now, const LevelCoefficients* next,
                           std::span<const double> u_next, std::span<double> u_now)
{
    const std::size_t N = grid_.space_points();
    const double dt = grid_.dt();
    const bool cn = scheme_.time_stepping == TimeStepping::crank_nicolson;
    const double theta = cn ? 0.5 : 1.0;
    if (cn && next == nullptr)
        throw std::invalid_argument("Crank-Nicolson step needs the next level's coefficients");
    if (now.cost.size() != N || u_next.size() != N || u_now.size() != N)
        throw std::invalid_argument("backward step: level size mismatch");

    const double t = grid_.time(n);
    for (std::size_t node = 0; node < N; ++node) {
        if (grid_.is_boundary(node)) {
            rhs_[node] = boundary_.value(t, grid_.point(node));
            continue;
        }
        rows_[node] = row_stencil(grid_, now.drift[node], scheme_.advection);
        const RowStencil& r = rows_[node];
        for (int a = 0; a < grid_.dim(); ++a)
            if (r.lower[a] < 0.0 || r.upper[a] < 0.0)
                monotone_ = false;
        double rhs = u_next[node] + dt * theta * now.cost[node];
        if (cn) {
            const RowStencil rn = row_stencil(grid_, next->drift[node], scheme_.advection);
            rhs += dt * (1.0 - theta) * (apply_generator(grid_, u_next, node, rn) + next->cost[node]);
            if (1.0 + (1.0 - theta) * dt * rn.centre < 0.0)
                monotone_ = false;
            for (int a = 0; a < grid_.dim(); ++a)
                if (rn.lower[a] < 0.0 || rn.upper[a] < 0.0)
                    monotone_ = false;
        }
        rhs_[node] = rhs;
    }
    if (!monotone_ && scheme_.advection == Advection::upwind && !cn)
        throw std::logic_error("upwind implicit Euler matrix is not an M-matrix");

    const double c = theta * dt;
    if (!sparse_) {
        lo_.assign(N, 0.0);
        di_.assign(N, 1.0);
        up_.assign(N, 0.0);
        for (std::size_t i = 0; i < N; ++i) {
            if (grid_.is_boundary(i))
                continue;
            lo_[i] = -c * rows_[i].lower[0];
            di_[i] = 1.0 - c * rows_[i].centre;
            up_[i] = -c * rows_[i].upper[0];
        }
        std::copy(rhs_.begin(), rhs_.end(), u_now.begin());
        if (grid_.is_torus())
            cyclic(lo_, di_, up_, u_now, work_a_, work_b_, work_c_);
        else
            thomas(lo_, di_, up_, u_now, work_a_);
        return;
    }

    Sparse& sp = *sparse_;
    sp.triplets.clear();
    for (std::size_t node = 0; node < N; ++node) {
        const int row = static_cast<int>(node);
        if (grid_.is_boundary(node)) {
            sp.triplets.emplace_back(row, row, 1.0);
            continue;
        }
        const RowStencil& r = rows_[node];
        sp.triplets.emplace_back(row, row, 1.0 - c * r.centre);
        for (int a = 0; a < grid_.dim(); ++a) {
            sp.triplets.emplace_back(row, static_cast<int>(grid_.neighbour(node, a, -1)), -c * r.lower[a]);
            sp.triplets.emplace_back(row, static_cast<int>(grid_.neighbour(node, a, 1)), -c * r.upper[a]);
        }
    }
    sp.A.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
    sp.A.setFromTriplets(sp.triplets.begin(), sp.triplets.end());
    sp.A.makeCompressed();
    if (!sp.analyzed) {
        sp.lu.analyzePattern(sp.A);
        sp.analyzed = true;
    }
    sp.lu.factorize(sp.A);
    if (sp.lu.info() != Eigen::Success)
        throw std::logic_error("level system is singular");
    Eigen::Map<const Eigen::VectorXd> b(rhs_.data(), static_cast<Eigen::Index>(N));
    Eigen::VectorXd x = sp.lu.solve(b);
    std::copy(x.data(), x.data() + N, u_now.begin());
}

// ---------------------------------------------------------------------------

Field solve_frozen(const Field& drift, const Field& cost, const BoundaryCondition& boundary,
                   const ParabolicScheme& scheme)
{
    const Grid& g = cost.grid();
    BackwardStepper stepper(g, boundary, scheme);
    Field u(g);
    LevelCoefficients next = LevelCoefficients::from_fields(drift, cost, g.nt());
    for (std::size_t n = g.nt(); n-- > 0;) {
        LevelCoefficients now = LevelCoefficients::from_fields(drift, cost, n);
        stepper.step(n, now, &next, u.level(n + 1), u.level(n));
        next = std::move(now);
    }
    u.require_finite("solve_frozen");
    return u;
}

Field pde_residual(const Field& u, const Field& drift, const Field& cost, const ParabolicScheme& scheme)
{
    const Grid& g = u.grid();
    if (!g.same_shape(cost.grid()))
        throw std::invalid_argument("pde_residual: grid mismatch");
    const bool cn = scheme.time_stepping == TimeStepping::crank_nicolson;
    Field res(g);
    for (std::size_t n = 0; n < g.nt(); ++n) {
        const auto now = u.level(n);
        const auto next = u.level(n + 1);
        for (std::size_t node = 0; node < g.space_points(); ++node) {
            if (g.is_boundary(node))
                continue;
            const double Lnow = apply_generator(g, now, node, row_stencil(g, drift.vector_at(n, node), scheme.advection));
            double r = (next[node] - now[node]) / g.dt();
            if (cn) {
                const double Lnext =
                    apply_generator(g, next, node, row_stencil(g, drift.vector_at(n + 1, node), scheme.advection));
                r += 0.5 * (Lnow + cost.at(n, node) + Lnext + cost.at(n + 1, node));
            } else {
                r += Lnow + cost.at(n, node);
            }
            res.at(n, node) = r;
        }
    }
    return res;
}

bool scheme_is_monotone(const Field& drift, const ParabolicScheme& scheme)
{
    const Grid& g = drift.grid();
    const double theta = scheme.time_stepping == TimeStepping::crank_nicolson ? 0.5 : 1.0;
    for (std::size_t n = 0; n < g.time_points(); ++n)
        for (std::size_t node = 0; node < g.space_points(); ++node) {
            if (g.is_boundary(node))
                continue;
            const RowStencil r = row_stencil(g, drift.vector_at(n, node), scheme.advection);
            for (int a = 0; a < g.dim(); ++a)
                if (r.lower[a] < 0.0 || r.upper[a] < 0.0)
                    return false;
            if (theta < 1.0 && 1.0 + (1.0 - theta) * g.dt() * r.centre < 0.0)
                return false;
        }
    return true;
}

// ---------------------------------------------------------------------------

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("log_log_slope: need at least two matching samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

namespace {

double sup_error(const ClosedFormProblem& problem, const Grid& grid, const ParabolicScheme& scheme)
{
    auto [drift, cost] = sample_to_grid(problem.oracle, grid, problem.action);
    const BoundaryCondition bc = problem.boundary ? problem.boundary(grid) : BoundaryCondition::natural(grid);
    const Field u = solve_frozen(drift, cost, bc, scheme);
    double err = 0.0;
    for (std::size_t n = 0; n < grid.time_points(); ++n)
        for (std::size_t node = 0; node < grid.space_points(); ++node)
            err = std::max(err, std::abs(u.at(n, node) - problem.exact(grid.time(n), grid.point(node))));
    return err;
}

}  // namespace

OrderReport convergence_order(const ClosedFormProblem& problem, const std::vector<Grid>& space_ladder,
                              const std::vector<Grid>& time_ladder, const ParabolicScheme& scheme)
{
    if (space_ladder.size() < 3 || time_ladder.size() < 3)
        throw std::invalid_argument("convergence_order: each ladder needs at least three grids");
    if (!problem.exact)
        throw std::invalid_argument("convergence_order: problem has no closed form");
    OrderReport rep;
    for (const Grid& g : space_ladder) {
        rep.dx.push_back(g.max_dx());
        rep.space_errors.push_back(sup_error(problem, g, scheme));
    }
    for (const Grid& g : time_ladder) {
        rep.dt.push_back(g.dt());
        rep.time_errors.push_back(sup_error(problem, g, scheme));
    }
    const double worst = std::max(*std::max_element(rep.space_errors.begin(), rep.space_errors.end()),
                                  *std::max_element(rep.time_errors.begin(), rep.time_errors.end()));
    if (worst < 1e-12) {
        rep.skipped = true;
        return rep;
    }
    rep.space_order = log_log_slope(rep.dx, rep.space_errors);
    rep.time_order = log_log_slope(rep.dt, rep.time_errors);
    return rep;
}

}  // namespace hjblab
