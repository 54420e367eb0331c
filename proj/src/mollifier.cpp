#include "hjblab/mollifier.hpp"

#include "hjblab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace hjblab {

namespace {

double bump(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

double unit_ball_mass(int dim)
{
    // |S^{m-1}| * int_0^1 r^{m-1} bump(r^2) dr with m = dim + 1
    const int m = dim + 1;
    auto radial = [m](double r) { return std::pow(r, m - 1) * bump(r * r); };
    const double I = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(radial, 0.0, 1.0, 15, 1e-15);
    const double sphere = m == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
    return sphere * I;
}

double r2_of(double t, const Point& x, int dim)
{
    double r2 = t * t;
    for (int k = 0; k < dim; ++k)
        r2 += x[k] * x[k];
    return r2;
}

void normalize(QuadratureStencil& s)
{
    double total = 0.0;
    for (double w : s.weight)
        total += w;
    if (!(total > 0.0))
        throw std::logic_error("mollifier stencil has no mass");
    for (double& w : s.weight)
        w /= total;
}

}  // namespace

MollifierKernel::MollifierKernel(double eps, int dim) : eps_(eps), dim_(dim)
{
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw std::invalid_argument("mollifier: eps must be positive");
    if (dim < 1 || dim > kMaxDim)
        throw std::invalid_argument("mollifier: dim must be 1 or 2");
    static const double mass1 = unit_ball_mass(1);
    static const double mass2 = unit_ball_mass(2);
    norm_ = 1.0 / (dim == 1 ? mass1 : mass2);
}

double MollifierKernel::unit_value(double t, const Point& x) const { return norm_ * bump(r2_of(t, x, dim_)); }

double MollifierKernel::value(double t, const Point& x) const
{
    Point y{};
    for (int k = 0; k < dim_; ++k)
        y[k] = x[k] / eps_;
    return std::pow(eps_, -(dim_ + 1)) * unit_value(t / eps_, y);
}

double MollifierKernel::lattice_integral(std::size_t per_eps) const
{
    const double h = eps_ / static_cast<double>(per_eps);
    const long M = static_cast<long>(per_eps);
    double sum = 0.0;
    const double cell = std::pow(h, dim_ + 1);
    for (long m = -M; m <= M; ++m)
        for (long i = -M; i <= M; ++i) {
            if (dim_ == 1) {
                sum += value(m * h, Point{i * h, 0.0}) * cell;
            } else {
                for (long j = -M; j <= M; ++j)
                    sum += value(m * h, Point{i * h, j * h}) * cell;
            }
        }
    return sum;
}

bool resolves(const Grid& grid, double eps)
{
    if (eps < grid.dt())
        return false;
    for (int a = 0; a < grid.dim(); ++a)
        if (eps < grid.dx(a))
            return false;
    return true;
}

QuadratureStencil grid_stencil(const MollifierKernel& kernel, const Grid& grid)
{
    const double eps = kernel.eps();
    const long Mt = static_cast<long>(std::floor(eps / grid.dt()));
    const long Mx = static_cast<long>(std::floor(eps / grid.dx(0)));
    const long My = grid.dim() > 1 ? static_cast<long>(std::floor(eps / grid.dx(1))) : 0;
    QuadratureStencil s;
    for (long m = -Mt; m <= Mt; ++m)
        for (long j = -My; j <= My; ++j)
            for (long i = -Mx; i <= Mx; ++i) {
                const double tau = m * grid.dt();
                const Point y{i * grid.dx(0), grid.dim() > 1 ? j * grid.dx(1) : 0.0};
                const double w = kernel.value(tau, y);
                if (w <= 0.0)
                    continue;
                s.dt.push_back(static_cast<double>(m));
                s.dx.push_back(Point{static_cast<double>(i), static_cast<double>(j)});
                s.weight.push_back(w);
            }
    if (s.size() == 0) {
        // eps below every step: the centre node carries all the mass
        s.dt.push_back(0.0);
        s.dx.push_back(Point{});
        s.weight.push_back(1.0);
    }
    normalize(s);
    return s;
}

QuadratureStencil cell_stencil(const MollifierKernel& kernel, std::size_t per_eps)
{
    if (per_eps < 1)
        throw std::invalid_argument("cell_stencil: per_eps must be positive");
    const double h = kernel.eps() / static_cast<double>(per_eps);
    const long M = static_cast<long>(per_eps);
    const long jlo = kernel.dim() > 1 ? -M : 0;
    const long jhi = kernel.dim() > 1 ? M : 1;
    QuadratureStencil s;
    for (long m = -M; m < M; ++m)
        for (long j = jlo; j < jhi; ++j)
            for (long i = -M; i < M; ++i) {
                const double tau = (m + 0.5) * h;
                const Point y{(i + 0.5) * h, kernel.dim() > 1 ? (j + 0.5) * h : 0.0};
                const double w = kernel.value(tau, y);
                if (w <= 0.0)
                    continue;
                s.dt.push_back(tau);
                s.dx.push_back(y);
                s.weight.push_back(w);
            }
    normalize(s);
    return s;
}

Field mollify_field(const Field& field, const MollifierKernel& kernel)
{
    const Grid& g = field.grid();
    if (kernel.dim() != g.dim())
        throw std::invalid_argument("mollify_field: kernel and grid dimensions differ");
    const QuadratureStencil st = grid_stencil(kernel, g);
    Field out(g, field.arity());
    const long nt = static_cast<long>(g.nt());
    const long nx = static_cast<long>(g.nx(0));
    const long ny = g.dim() > 1 ? static_cast<long>(g.nx(1)) : 1;
    parallel_for(g.time_points(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t n = begin; n < end; ++n)
            for (std::size_t node = 0; node < g.space_points(); ++node) {
                const auto idx = g.multi_index(node);
                for (std::size_t q = 0; q < st.size(); ++q) {
                    const long src_n = static_cast<long>(n) - static_cast<long>(st.dt[q]);
                    if (src_n < 0 || src_n > nt)
                        continue;
                    long i = static_cast<long>(idx[0]) - static_cast<long>(st.dx[q][0]);
                    long j = static_cast<long>(idx[1]) - static_cast<long>(st.dx[q][1]);
                    if (g.is_torus()) {
                        i = ((i % nx) + nx) % nx;
                        j = ((j % ny) + ny) % ny;
                    } else if (i < 0 || i >= nx || j < 0 || j >= ny) {
                        continue;
                    }
                    const std::size_t src = g.node_index(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
                    for (std::size_t c = 0; c < field.arity(); ++c)
                        out.at(n, node, c) += st.weight[q] * field.at(static_cast<std::size_t>(src_n), src, c);
                }
            }
    });
    out.require_finite("mollify_field");
    return out;
}

CoefficientOracle mollify_oracle(const CoefficientOracle& oracle, const MollifierKernel& kernel, const Grid& domain,
                                 std::size_t per_eps)
{
    if (kernel.dim() != oracle.dim() || domain.dim() != oracle.dim())
        throw std::invalid_argument("mollify_oracle: dimension mismatch");
    auto stencil = std::make_shared<const QuadratureStencil>(cell_stencil(kernel, per_eps));
    const double T = domain.T();
    const int dim = oracle.dim();
    auto source = std::make_shared<const CoefficientOracle>(oracle);
    auto inside = [domain](const Point& y) { return domain.contains(y); };

    auto eval = [stencil, source, domain, T, dim, inside](double t, const Point& x, const Action& a) {
        Coefficients acc;
        const QuadratureStencil& st = *stencil;
        for (std::size_t q = 0; q < st.size(); ++q) {
            const double ts = t - st.dt[q];
            if (ts < 0.0 || ts > T)
                continue;
            Point y{};
            for (int k = 0; k < dim; ++k)
                y[k] = x[k] - st.dx[q][k];
            if (domain.is_torus())
                y = domain.wrap(y);
            else if (!inside(y))
                continue;
            const Coefficients c = source->raw(ts, y, a);
            for (int k = 0; k < dim; ++k)
                acc.drift[k] += st.weight[q] * c.drift[k];
            acc.cost += st.weight[q] * c.cost;
        }
        return acc;
    };
    auto bound = [stencil, source, domain, T, dim, inside](double t, const Point& x) {
        double acc = 0.0;
        const QuadratureStencil& st = *stencil;
        for (std::size_t q = 0; q < st.size(); ++q) {
            const double ts = t - st.dt[q];
            if (ts < 0.0 || ts > T)
                continue;
            Point y{};
            for (int k = 0; k < dim; ++k)
                y[k] = x[k] - st.dx[q][k];
            if (domain.is_torus())
                y = domain.wrap(y);
            else if (!inside(y))
                continue;
            acc += st.weight[q] * source->bound(ts, y);
        }
        return acc;
    };
    auto admit = [source](const Action& a) { return source->admits(a); };
    ParamMap params = oracle.params();
    params["eps"] = std::to_string(kernel.eps());
    return CoefficientOracle("mollified(" + oracle.name() + ")", dim, params, eval, bound, admit,
                             oracle.default_actions(), oracle.lp_exponent());
}

namespace {

std::size_t cells_for(double length, double h) { return static_cast<std::size_t>(std::ceil(length / h - 1e-9)); }

Grid refined_grid(const Grid& g, double h)
{
    std::vector<Interval> extent;
    std::vector<std::size_t> nx;
    for (int a = 0; a < g.dim(); ++a) {
        extent.push_back(g.axis(a).extent);
        const std::size_t cells = std::max<std::size_t>(cells_for(g.axis(a).extent.length(), h), g.nx(a));
        nx.push_back(g.is_torus() ? cells : cells + 1);
    }
    const std::size_t nt = std::max<std::size_t>(cells_for(g.T(), h), g.nt());
    return Grid::build(g.kind(), g.dim(), extent, nx, g.T(), nt);
}

Field sample_drift(const CoefficientOracle& o, const Grid& g, const Action& a, Field* cost_out)
{
    Field drift(g, static_cast<std::size_t>(g.dim()));
    Field cost(g);
    parallel_for(g.time_points(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t n = begin; n < end; ++n) {
            const double t = g.time(n);
            for (std::size_t node = 0; node < g.space_points(); ++node) {
                const Coefficients c = o.raw(t, g.point(node), a);
                drift.set_vector(n, node, c.drift);
                cost.at(n, node) = c.cost;
            }
        }
    });
    drift.require_finite("mollified drift");
    cost.require_finite("mollified cost");
    *cost_out = std::move(cost);
    return drift;
}

}  // namespace

LadderReport coefficient_ladder(const CoefficientOracle& oracle, const Action& action, const Grid& grid,
                                const std::vector<double>& eps_list, double p)
{
    if (eps_list.empty())
        throw std::invalid_argument("coefficient_ladder: empty eps list");
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        if (k > 0 && !(eps_list[k] < eps_list[k - 1]))
            throw std::invalid_argument("coefficient_ladder: eps list must be strictly decreasing");
        if (!resolves(grid, eps_list[k]))
            throw std::invalid_argument("coefficient_ladder: eps = " + std::to_string(eps_list[k]) +
                                        " is not resolved by the grid");
    }
    LadderReport rep;
    rep.p = p > 0.0 ? p : oracle.lp_exponent();
    rep.quadrature_grid = refined_grid(grid, eps_list.back() / 4.0);
    const Grid& fine = rep.quadrature_grid;

    Field raw_cost;
    const Field raw_drift = sample_drift(oracle, fine, action, &raw_cost);
    const double eps_max = eps_list.front();
    const TimeWindow interior = TimeWindow::between(fine, eps_max, fine.T() - eps_max);

    for (double eps : eps_list) {
        const MollifierKernel kernel(eps, grid.dim());
        const CoefficientOracle moll = mollify_oracle(oracle, kernel, grid);
        LadderRung rung;
        rung.eps = eps;
        rung.drift = sample_drift(moll, grid, action, &rung.cost);
        Field fine_cost;
        Field fine_drift = sample_drift(moll, fine, action, &fine_cost);
        rung.drift_sup = lp_norm(fine_drift, INFINITY);
        rung.cost_sup = lp_norm(fine_cost, INFINITY);
        fine_drift -= raw_drift;
        fine_cost -= raw_cost;
        rung.drift_distance = lp_norm(fine_drift, rep.p);
        rung.cost_distance = lp_norm(fine_cost, rep.p);
        if (interior.first <= interior.last) {
            rung.drift_distance_interior = lp_norm(fine_drift, rep.p, interior);
            rung.cost_distance_interior = lp_norm(fine_cost, rep.p, interior);
        }
        rep.rungs.push_back(std::move(rung));
    }
    return rep;
}

}  // namespace hjblab
