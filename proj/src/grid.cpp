#include "hjblab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hjblab {

Grid Grid::build(DomainKind kind, int dim, const std::vector<Interval>& extent,
                 const std::vector<std::size_t>& nx, double T, std::size_t nt)
{
    if (dim < 1 || dim > kMaxDim)
        throw std::invalid_argument("grid: dim must be 1 or 2");
    if (extent.size() != static_cast<std::size_t>(dim) || nx.size() != static_cast<std::size_t>(dim))
        throw std::invalid_argument("grid: extent and nx need one entry per axis");
    if (!(T > 0.0) || !std::isfinite(T))
        throw std::invalid_argument("grid: T must be positive");
    if (nt < 1)
        throw std::invalid_argument("grid: nt must be at least 1");

    Grid g;
    g.kind_ = kind;
    g.dim_ = dim;
    g.T_ = T;
    g.nt_ = nt;
    g.dt_ = T / static_cast<double>(nt);
    for (int a = 0; a < dim; ++a) {
        if (nx[a] < 2)
            throw std::invalid_argument("grid: nx must be at least 2 on every axis");
        const double len = extent[a].length();
        if (!(len > 0.0) || !std::isfinite(len))
            throw std::invalid_argument("grid: degenerate extent");
        Axis& ax = g.axes_[a];
        ax.extent = extent[a];
        ax.n = nx[a];
        ax.dx = kind == DomainKind::torus ? len / static_cast<double>(nx[a])
                                          : len / static_cast<double>(nx[a] - 1);
    }
    for (int a = dim; a < kMaxDim; ++a)
        g.axes_[a] = Axis{Interval{0.0, 0.0}, 1, 1.0};
    return g;
}

double Grid::max_dx() const
{
    double m = 0.0;
    for (int a = 0; a < dim_; ++a)
        m = std::max(m, axes_[a].dx);
    return m;
}

std::size_t Grid::space_points() const
{
    std::size_t count = 1;
    for (int a = 0; a < dim_; ++a)
        count *= axes_[a].n;
    return count;
}

double Grid::coord(int a, std::size_t i) const
{
    const Axis& ax = axes_[a];
    if (kind_ == DomainKind::torus)
        return ax.extent.lo + (static_cast<double>(i) + 0.5) * ax.dx;
    return ax.extent.lo + ax.extent.length() * static_cast<double>(i) / static_cast<double>(ax.n - 1);
}

std::array<std::size_t, kMaxDim> Grid::multi_index(std::size_t node) const
{
    std::array<std::size_t, kMaxDim> idx{};
    idx[0] = node % axes_[0].n;
    if (dim_ > 1)
        idx[1] = node / axes_[0].n;
    return idx;
}

Point Grid::point(std::size_t node) const
{
    const auto idx = multi_index(node);
    Point x{};
    for (int a = 0; a < dim_; ++a)
        x[a] = coord(a, idx[a]);
    return x;
}

bool Grid::is_boundary(std::size_t node) const
{
    if (kind_ == DomainKind::torus)
        return false;
    const auto idx = multi_index(node);
    for (int a = 0; a < dim_; ++a)
        if (idx[a] == 0 || idx[a] + 1 == axes_[a].n)
            return true;
    return false;
}

double Grid::boundary_distance(std::size_t node) const
{
    if (kind_ == DomainKind::torus)
        return std::numeric_limits<double>::infinity();
    const Point x = point(node);
    double d = std::numeric_limits<double>::infinity();
    for (int a = 0; a < dim_; ++a)
        d = std::min({d, x[a] - axes_[a].extent.lo, axes_[a].extent.hi - x[a]});
    return d;
}

std::size_t Grid::neighbour(std::size_t node, int a, int offset) const
{
    auto idx = multi_index(node);
    const long n = static_cast<long>(axes_[a].n);
    long i = static_cast<long>(idx[a]) + offset;
    if (kind_ == DomainKind::torus) {
        i = ((i % n) + n) % n;
    } else if (i < 0 || i >= n) {
        return node;
    }
    idx[a] = static_cast<std::size_t>(i);
    return node_index(idx[0], idx[1]);
}

Point Grid::wrap(const Point& x) const
{
    if (kind_ != DomainKind::torus)
        return x;
    Point y = x;
    for (int a = 0; a < dim_; ++a) {
        const double lo = axes_[a].extent.lo;
        const double len = axes_[a].extent.length();
        double r = std::fmod(x[a] - lo, len);
        if (r < 0.0)
            r += len;
        if (r >= len)
            r = 0.0;
        y[a] = lo + r;
    }
    return y;
}

Point Grid::clamp(const Point& x) const
{
    if (kind_ == DomainKind::torus)
        return wrap(x);
    Point y = x;
    for (int a = 0; a < dim_; ++a)
        y[a] = std::clamp(x[a], axes_[a].extent.lo, axes_[a].extent.hi);
    return y;
}

bool Grid::contains(const Point& x) const
{
    if (kind_ == DomainKind::torus)
        return true;
    for (int a = 0; a < dim_; ++a)
        if (x[a] < axes_[a].extent.lo || x[a] > axes_[a].extent.hi)
            return false;
    return true;
}

std::size_t Grid::nearest_node(const Point& x) const
{
    const Point y = clamp(x);
    std::array<std::size_t, kMaxDim> idx{};
    for (int a = 0; a < dim_; ++a) {
        const Axis& ax = axes_[a];
        double u = (y[a] - ax.extent.lo) / ax.dx;
        long i;
        if (kind_ == DomainKind::torus) {
            i = static_cast<long>(std::floor(u));
            const long n = static_cast<long>(ax.n);
            i = ((i % n) + n) % n;
        } else {
            i = std::lround(u);
            i = std::clamp(i, 0L, static_cast<long>(ax.n) - 1);
        }
        idx[a] = static_cast<std::size_t>(i);
    }
    return node_index(idx[0], idx[1]);
}

double Grid::distance(const Point& x, const Point& y) const
{
    double s = 0.0;
    for (int a = 0; a < dim_; ++a) {
        double d = std::abs(x[a] - y[a]);
        if (kind_ == DomainKind::torus) {
            const double len = axes_[a].extent.length();
            d = std::fmod(d, len);
            d = std::min(d, len - d);
        }
        s += d * d;
    }
    return std::sqrt(s);
}

double Grid::measure() const
{
    double m = T_;
    for (int a = 0; a < dim_; ++a)
        m *= axes_[a].extent.length();
    return m;
}

double Grid::space_weight(std::size_t node) const
{
    const auto idx = multi_index(node);
    double w = 1.0;
    for (int a = 0; a < dim_; ++a) {
        double wa = axes_[a].dx;
        if (kind_ == DomainKind::box && (idx[a] == 0 || idx[a] + 1 == axes_[a].n))
            wa *= 0.5;
        w *= wa;
    }
    return w;
}

double Grid::time_weight(std::size_t n) const
{
    return (n == 0 || n == nt_) ? 0.5 * dt_ : dt_;
}

bool Grid::same_shape(const Grid& other) const
{
    if (kind_ != other.kind_ || dim_ != other.dim_ || nt_ != other.nt_ || T_ != other.T_)
        return false;
    for (int a = 0; a < dim_; ++a)
        if (axes_[a].n != other.axes_[a].n || axes_[a].extent.lo != other.axes_[a].extent.lo ||
            axes_[a].extent.hi != other.axes_[a].extent.hi)
            return false;
    return true;
}

// ---------------------------------------------------------------------------

Field::Field(const Grid& grid, std::size_t arity, double fill)
    : grid_(grid), arity_(arity), values_(grid.node_count() * arity, fill)
{
    if (arity == 0)
        throw std::invalid_argument("field: arity must be positive");
}

Point Field::vector_at(std::size_t n, std::size_t node) const
{
    Point v{};
    for (std::size_t c = 0; c < arity_ && c < static_cast<std::size_t>(kMaxDim); ++c)
        v[c] = at(n, node, c);
    return v;
}

void Field::set_vector(std::size_t n, std::size_t node, const Point& v)
{
    for (std::size_t c = 0; c < arity_ && c < static_cast<std::size_t>(kMaxDim); ++c)
        at(n, node, c) = v[c];
}

double Field::magnitude(std::size_t n, std::size_t node) const
{
    if (arity_ == 1)
        return std::abs(at(n, node));
    double s = 0.0;
    for (std::size_t c = 0; c < arity_; ++c)
        s += at(n, node, c) * at(n, node, c);
    return std::sqrt(s);
}

std::span<double> Field::level(std::size_t n)
{
    const std::size_t len = grid_.space_points() * arity_;
    return std::span<double>(values_).subspan(n * len, len);
}

std::span<const double> Field::level(std::size_t n) const
{
    const std::size_t len = grid_.space_points() * arity_;
    return std::span<const double>(values_).subspan(n * len, len);
}

bool Field::all_finite() const
{
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void Field::require_finite(const std::string& context) const
{
    if (!all_finite())
        throw std::logic_error(context + ": non-finite value in field");
}

Field& Field::operator+=(const Field& other)
{
    if (other.values_.size() != values_.size())
        throw std::invalid_argument("field: shape mismatch");
    for (std::size_t k = 0; k < values_.size(); ++k)
        values_[k] += other.values_[k];
    return *this;
}

Field& Field::operator-=(const Field& other)
{
    if (other.values_.size() != values_.size())
        throw std::invalid_argument("field: shape mismatch");
    for (std::size_t k = 0; k < values_.size(); ++k)
        values_[k] -= other.values_[k];
    return *this;
}

namespace {

struct Bracket {
    std::size_t i0, i1;
    double w1;
};

Bracket bracket_axis(const Grid& g, int a, double x)
{
    const Axis& ax = g.axis(a);
    if (g.is_torus()) {
        double u = (x - ax.extent.lo) / ax.dx - 0.5;
        double fl = std::floor(u);
        const long n = static_cast<long>(ax.n);
        long i0 = static_cast<long>(fl);
        const double w1 = u - fl;
        i0 = ((i0 % n) + n) % n;
        return {static_cast<std::size_t>(i0), static_cast<std::size_t>((i0 + 1) % n), w1};
    }
    double u = std::clamp((x - ax.extent.lo) / ax.dx, 0.0, static_cast<double>(ax.n - 1));
    std::size_t i0 = std::min(static_cast<std::size_t>(u), ax.n - 2);
    return {i0, i0 + 1, u - static_cast<double>(i0)};
}

}  // namespace

double Field::interpolate(double t, const Point& x, std::size_t c) const
{
    const double tt = std::clamp(t, 0.0, grid_.T());
    double ut = tt / grid_.dt();
    std::size_t n0 = std::min(static_cast<std::size_t>(ut), grid_.nt() - 1);
    const double wt = std::clamp(ut - static_cast<double>(n0), 0.0, 1.0);

    const Point y = grid_.wrap(x);
    const Bracket bx = bracket_axis(grid_, 0, y[0]);
    auto level_value = [&](std::size_t n) {
        if (grid_.dim() == 1) {
            return (1.0 - bx.w1) * at(n, bx.i0, c) + bx.w1 * at(n, bx.i1, c);
        }
        const Bracket by = bracket_axis(grid_, 1, y[1]);
        auto v = [&](std::size_t i, std::size_t j) { return at(n, grid_.node_index(i, j), c); };
        return (1.0 - by.w1) * ((1.0 - bx.w1) * v(bx.i0, by.i0) + bx.w1 * v(bx.i1, by.i0)) +
               by.w1 * ((1.0 - bx.w1) * v(bx.i0, by.i1) + bx.w1 * v(bx.i1, by.i1));
    };
    return (1.0 - wt) * level_value(n0) + wt * level_value(n0 + 1);
}

// ---------------------------------------------------------------------------

TimeWindow TimeWindow::between(const Grid& grid, double t_lo, double t_hi)
{
    TimeWindow w;
    const double tol = 1e-12 * grid.T();
    w.first = static_cast<std::size_t>(std::ceil(std::max(0.0, t_lo) / grid.dt() - tol));
    const double hi = std::min(grid.T(), t_hi);
    w.last = static_cast<std::size_t>(std::floor(hi / grid.dt() + tol));
    w.last = std::min(w.last, grid.nt());
    return w;
}

namespace {

double lp_norm_impl(const Field& field, double p, double margin, const TimeWindow& window)
{
    if (!(p >= 1.0))
        throw std::invalid_argument("lp_norm: p must be at least 1");
    const Grid& g = field.grid();
    const std::size_t first = window.first;
    const std::size_t last = std::min(window.last, g.nt());
    const bool sup = std::isinf(p);
    double acc = 0.0;
    for (std::size_t n = first; n <= last && first <= last; ++n) {
        // Trapezoid in time over the window itself.
        double wt = g.dt();
        if (n == first || n == last)
            wt *= 0.5;
        if (first == last)
            wt = 1.0;
        for (std::size_t node = 0; node < g.space_points(); ++node) {
            if (margin > 0.0 && g.boundary_distance(node) < margin)
                continue;
            const double v = field.magnitude(n, node);
            if (sup)
                acc = std::max(acc, v);
            else
                acc += wt * g.space_weight(node) * std::pow(v, p);
        }
    }
    return sup ? acc : std::pow(acc, 1.0 / p);
}

}  // namespace

double lp_norm(const Field& field, double p, const TimeWindow& window)
{
    return lp_norm_impl(field, p, 0.0, window);
}

double lp_norm_interior(const Field& field, double p, double margin, const TimeWindow& window)
{
    return lp_norm_impl(field, p, margin, window);
}

Field spatial_gradient(const Field& field, GradientScheme scheme, const Field* sign_field)
{
    const Grid& g = field.grid();
    const int dim = g.dim();
    if (field.arity() != 1)
        throw std::invalid_argument("spatial_gradient: scalar field required");
    if (scheme == GradientScheme::upwind) {
        if (sign_field == nullptr)
            throw std::invalid_argument("spatial_gradient: upwind needs a sign field");
        if (sign_field->size() != g.node_count() * static_cast<std::size_t>(dim))
            throw std::invalid_argument("spatial_gradient: sign field shape mismatch");
    }
    Field grad(g, static_cast<std::size_t>(dim));
    for (std::size_t n = 0; n < g.time_points(); ++n) {
        for (std::size_t node = 0; node < g.space_points(); ++node) {
            const auto idx = g.multi_index(node);
            for (int a = 0; a < dim; ++a) {
                const double h = g.dx(a);
                const double u0 = field.at(n, node);
                const double up = field.at(n, g.neighbour(node, a, +1));
                const double um = field.at(n, g.neighbour(node, a, -1));
                const bool at_lo = !g.is_torus() && idx[a] == 0;
                const bool at_hi = !g.is_torus() && idx[a] + 1 == g.nx(a);
                double d;
                if (at_lo) {
                    d = (up - u0) / h;
                } else if (at_hi) {
                    d = (u0 - um) / h;
                } else {
                    double s = 0.0;
                    if (scheme == GradientScheme::upwind)
                        s = sign_field->at(n, node, static_cast<std::size_t>(a));
                    if (s > 0.0)
                        d = (up - u0) / h;
                    else if (s < 0.0)
                        d = (u0 - um) / h;
                    else
                        d = (up - um) / (2.0 * h);
                }
                grad.at(n, node, static_cast<std::size_t>(a)) = d;
            }
        }
    }
    return grad;
}

double holder_seminorm(const Field& field, std::size_t n, double alpha)
{
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("holder_seminorm: alpha must lie in (0, 1]");
    const Grid& g = field.grid();
    const std::size_t m = g.space_points();
    double best = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const Point xi = g.point(i);
        const double fi = field.at(n, i);
        for (std::size_t j = i + 1; j < m; ++j) {
            const double d = g.distance(xi, g.point(j));
            if (d <= 0.0)
                continue;
            best = std::max(best, std::abs(fi - field.at(n, j)) / std::pow(d, alpha));
        }
    }
    return best;
}

Field roll(const Field& field, long shift)
{
    const Grid& g = field.grid();
    if (!g.is_torus())
        throw std::invalid_argument("roll: torus only");
    Field out(g, field.arity());
    const long n0 = static_cast<long>(g.nx(0));
    for (std::size_t n = 0; n < g.time_points(); ++n)
        for (std::size_t node = 0; node < g.space_points(); ++node) {
            auto idx = g.multi_index(node);
            long i = (static_cast<long>(idx[0]) + shift) % n0;
            if (i < 0)
                i += n0;
            const std::size_t dst = g.node_index(static_cast<std::size_t>(i), idx[1]);
            for (std::size_t c = 0; c < field.arity(); ++c)
                out.at(n, dst, c) = field.at(n, node, c);
        }
    return out;
}

}  // namespace hjblab
