#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hjblab {

inline constexpr int kMaxDim = 2;

/// A point (or vector) in R^d, d <= kMaxDim. Unused trailing components are zero.
using Point = std::array<double, kMaxDim>;

enum class DomainKind { torus, box };

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
    double length() const { return hi - lo; }
};

struct Axis {
    Interval extent;
    std::size_t n = 0;
    double dx = 0.0;
};

/**
 * Space-time discretization of [0,T] x D.
 *
 * Torus axes use cell-centered nodes lo + (i + 1/2) dx with dx = L / n.
 * Box axes use endpoint-inclusive nodes with dx = (hi - lo) / (n - 1).
 * Time nodes are t_n = T n / nt for n = 0..nt.
 */
class Grid {
public:
    Grid() = default;

    /// Throws std::invalid_argument unless nx >= 2 per axis, nt >= 1, T > 0 and every extent is nondegenerate.
    static Grid build(DomainKind kind, int dim, const std::vector<Interval>& extent,
                      const std::vector<std::size_t>& nx, double T, std::size_t nt);

    DomainKind kind() const { return kind_; }
    bool is_torus() const { return kind_ == DomainKind::torus; }
    int dim() const { return dim_; }
    const Axis& axis(int a) const { return axes_[a]; }
    std::size_t nx(int a = 0) const { return axes_[a].n; }
    double dx(int a = 0) const { return axes_[a].dx; }
    /// Largest spatial step over all axes.
    double max_dx() const;

    double T() const { return T_; }
    std::size_t nt() const { return nt_; }
    double dt() const { return dt_; }
    std::size_t time_points() const { return nt_ + 1; }
    double time(std::size_t n) const { return T_ * static_cast<double>(n) / static_cast<double>(nt_); }

    std::size_t space_points() const;
    std::size_t node_count() const { return time_points() * space_points(); }

    double coord(int a, std::size_t i) const;
    std::array<std::size_t, kMaxDim> multi_index(std::size_t node) const;
    std::size_t node_index(std::size_t i, std::size_t j = 0) const { return i + axes_[0].n * j; }
    Point point(std::size_t node) const;
    /// Box nodes on the domain edge. Always false on the torus.
    bool is_boundary(std::size_t node) const;
    /// Distance of a box node to the nearest domain edge (infinity on the torus).
    double boundary_distance(std::size_t node) const;

    /// Neighbour of a node along an axis with periodic wrap; returns node itself when it would leave a box.
    std::size_t neighbour(std::size_t node, int a, int offset) const;

    /// Wraps a point into the fundamental cell (torus) or leaves it unchanged (box).
    Point wrap(const Point& x) const;
    /// Projects a point onto the box; identity on the torus after wrapping.
    Point clamp(const Point& x) const;
    bool contains(const Point& x) const;
    /// Nearest spatial node (torus metric on the torus).
    std::size_t nearest_node(const Point& x) const;
    /// Distance with the torus metric on the torus, Euclidean otherwise.
    double distance(const Point& x, const Point& y) const;

    /// Measure of the space-time cylinder.
    double measure() const;

    /// Quadrature weight of a spatial node (midpoint on torus, trapezoid on box).
    double space_weight(std::size_t node) const;
    /// Trapezoid weight of a time node.
    double time_weight(std::size_t n) const;

    bool same_shape(const Grid& other) const;

private:
    DomainKind kind_ = DomainKind::torus;
    int dim_ = 1;
    std::array<Axis, kMaxDim> axes_{};
    double T_ = 1.0;
    std::size_t nt_ = 1;
    double dt_ = 1.0;
};

/**
 * Real-valued (arity 1) or vector-valued samples on every space-time node.
 * Layout: ((n * space_points + node) * arity + component).
 */
class Field {
public:
    Field() = default;
    explicit Field(const Grid& grid, std::size_t arity = 1, double fill = 0.0);

    const Grid& grid() const { return grid_; }
    std::size_t arity() const { return arity_; }
    std::size_t size() const { return values_.size(); }

    double& at(std::size_t n, std::size_t node, std::size_t c = 0)
    {
        return values_[(n * grid_.space_points() + node) * arity_ + c];
    }
    double at(std::size_t n, std::size_t node, std::size_t c = 0) const
    {
        return values_[(n * grid_.space_points() + node) * arity_ + c];
    }

    Point vector_at(std::size_t n, std::size_t node) const;
    void set_vector(std::size_t n, std::size_t node, const Point& v);
    /// Euclidean magnitude over components.
    double magnitude(std::size_t n, std::size_t node) const;

    std::span<double> level(std::size_t n);
    std::span<const double> level(std::size_t n) const;
    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    bool all_finite() const;
    /// Throws std::logic_error naming the context if any entry is NaN or infinite.
    void require_finite(const std::string& context) const;

    Field& operator+=(const Field& other);
    Field& operator-=(const Field& other);
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator+(Field a, const Field& b) { return a += b; }

    /// Linear interpolation in space and time (periodic on the torus, clamped on the box).
    double interpolate(double t, const Point& x, std::size_t c = 0) const;

private:
    Grid grid_;
    std::size_t arity_ = 1;
    std::vector<double> values_;
};

/// Selects the time levels [first, last] that enter a norm or a sup.
struct TimeWindow {
    std::size_t first = 0;
    std::size_t last = static_cast<std::size_t>(-1);
    /// Levels with t in [t_lo, t_hi].
    static TimeWindow between(const Grid& grid, double t_lo, double t_hi);
};

/// Discrete L^p norm over the cylinder; p = infinity returns max |value|. Throws for p < 1.
double lp_norm(const Field& field, double p, const TimeWindow& window = {});
/// Same, skipping spatial nodes closer than `margin` to a box edge.
double lp_norm_interior(const Field& field, double p, double margin, const TimeWindow& window = {});

enum class GradientScheme { central, upwind };

/**
 * Per-node finite-difference gradient (arity = dim).
 * Upwind reads the direction from `sign_field` (arity dim): positive -> forward
 * difference, negative -> backward, zero -> central. Box edges use one-sided
 * inward differences; the torus wraps.
 */
Field spatial_gradient(const Field& field, GradientScheme scheme = GradientScheme::central,
                       const Field* sign_field = nullptr);

/// max over node pairs of |f(x) - f(y)| / |x - y|^alpha at time level n. Throws unless alpha in (0, 1].
double holder_seminorm(const Field& field, std::size_t n, double alpha);

/// Cyclic index shift along axis 0 (torus only).
Field roll(const Field& field, long shift);

}  // namespace hjblab
