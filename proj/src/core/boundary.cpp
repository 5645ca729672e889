#include "lentil/boundary.hpp"

#include <algorithm>
#include <cmath>

#include "lentil/error.hpp"

namespace lentil {

BoundaryGrid::BoundaryGrid(std::int64_t n, double length) : n_(n), length_(length)
{
    require(n >= 8, ErrorCode::invalid_argument, "boundary grid needs at least 8 nodes");
    require(std::isfinite(length) && length > 0, ErrorCode::invalid_argument,
            "boundary length must be positive");
}

std::int64_t BoundaryGrid::wrap(std::int64_t node) const { return ((node % n_) + n_) % n_; }

double BoundaryGrid::param(std::int64_t node) const
{
    return static_cast<double>(wrap(node)) * spacing();
}

double BoundaryGrid::param(GridParam g) const
{
    return (static_cast<double>(wrap(g.node)) + g.frac) * spacing();
}

std::int64_t BoundaryGrid::nearest_node(double s) const
{
    return wrap(static_cast<std::int64_t>(std::llround(s / spacing())));
}

GridParam BoundaryGrid::locate(double s) const
{
    const double u = s / spacing();
    const double fl = std::floor(u);
    return normalize(static_cast<std::int64_t>(fl), u - fl);
}

GridParam BoundaryGrid::normalize(std::int64_t node, double frac) const
{
    const double fl = std::floor(frac);
    node += static_cast<std::int64_t>(fl);
    frac -= fl;
    if (frac >= 1.0)
    {
        frac = 0.0;
        ++node;
    }
    return {wrap(node), frac};
}

double BoundaryGrid::arc_distance(std::int64_t a, std::int64_t b) const
{
    const std::int64_t m = wrap(a - b);
    return static_cast<double>(std::min(m, n_ - m)) * spacing();
}

double BoundaryGrid::arc_distance(std::int64_t a, GridParam b) const
{
    // Integer cyclic offset first so that shifting both arguments by whole
    // nodes gives bit-identical results.
    const std::int64_t m = wrap(a - b.node);
    const double fwd = static_cast<double>(m) - b.frac;
    const double bwd = static_cast<double>(n_ - m) + b.frac;
    return std::min(std::abs(fwd), bwd) * spacing();
}

double BoundaryGrid::arc_distance(GridParam a, GridParam b) const
{
    const std::int64_t m = wrap(a.node - b.node);
    const double fwd = static_cast<double>(m) + (a.frac - b.frac);
    const double bwd = static_cast<double>(n_) - fwd;
    return std::min(std::abs(fwd), std::abs(bwd)) * spacing();
}

namespace {

double at(const SampledFunction& f, const BoundaryGrid& g, std::int64_t i)
{
    return f[static_cast<std::size_t>(g.wrap(i))];
}

double second_difference(const SampledFunction& f, const BoundaryGrid& g, std::int64_t i, int m)
{
    const double a = at(f, g, i - m), b = at(f, g, i), c = at(f, g, i + m);
    if (std::isnan(a) || std::isnan(b) || std::isnan(c))
        fail(ErrorCode::invalid_argument, "Hessian stencil leaves the support of the function");
    const double h = m * g.spacing();
    return (a - 2.0 * b + c) / (h * h);
}

}  // namespace

HessianEstimate boundary_hessian(const SampledFunction& f, const BoundaryGrid& grid, GridParam x,
                                 int h_nodes, bool richardson)
{
    require(static_cast<std::int64_t>(f.size()) == grid.size(), ErrorCode::invalid_argument,
            "sampled function does not match the grid");
    require(h_nodes >= 1, ErrorCode::invalid_argument, "Hessian stencil must be at least one node");
    require(4 * h_nodes < grid.size(), ErrorCode::invalid_argument, "Hessian stencil wider than the grid");
    auto blend = [&](int m) {
        const double d0 = second_difference(f, grid, x.node, m);
        if (x.frac == 0.0)
            return d0;
        const double d1 = second_difference(f, grid, x.node + 1, m);
        return (1.0 - x.frac) * d0 + x.frac * d1;
    };
    const double d1 = blend(h_nodes);
    const double d2 = blend(2 * h_nodes);
    HessianEstimate out;
    out.error = std::abs(d1 - d2) / 3.0;
    out.value = richardson ? (4.0 * d1 - d2) / 3.0 : d1;
    return out;
}

double interpolate(const SampledFunction& f, const BoundaryGrid& grid, GridParam x)
{
    const double a = at(f, grid, x.node - 1), b = at(f, grid, x.node), c = at(f, grid, x.node + 1);
    const double t = x.frac;
    if (t == 0.0)
        return b;
    // Quadratic through (-1,a),(0,b),(1,c), blended with the one centred on
    // the next node so the result is continuous across nodes.
    const double q0 = b + 0.5 * t * (c - a) + 0.5 * t * t * (a - 2 * b + c);
    const double d = at(f, grid, x.node + 2);
    const double u = t - 1.0;
    const double q1 = c + 0.5 * u * (d - b) + 0.5 * u * u * (b - 2 * c + d);
    return (1.0 - t) * q0 + t * q1;
}

std::vector<CriticalPoint> critical_points(const SampledFunction& f, const BoundaryGrid& grid)
{
    require(static_cast<std::int64_t>(f.size()) == grid.size(), ErrorCode::invalid_argument,
            "sampled function does not match the grid");
    const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
    const double scale = std::max({std::abs(*lo), std::abs(*hi), 1.0});
    if (!(*hi - *lo > 1e-13 * scale))
        fail(ErrorCode::degenerate, "critical points: function is constant on the grid");

    std::vector<CriticalPoint> out;
    const std::int64_t n = grid.size();
    for (std::int64_t i = 0; i < n; ++i)
    {
        const double a = at(f, grid, i - 1), b = at(f, grid, i), c = at(f, grid, i + 1);
        CriticalKind kind;
        if (b < a && b <= c)
            kind = CriticalKind::minimum;
        else if (b > a && b >= c)
            kind = CriticalKind::maximum;
        else
            continue;
        const double den = a - 2.0 * b + c;
        double off = den != 0.0 ? 0.5 * (a - c) / den : 0.0;
        off = std::clamp(off, -0.5, 0.5);
        CriticalPoint cp;
        cp.where = grid.normalize(i, off);
        cp.value = b - 0.125 * (a - c) * (a - c) / (den != 0.0 ? den : 1.0);
        if (den == 0.0)
            cp.value = b;
        cp.kind = kind;
        out.push_back(cp);
    }
    if (out.size() < 2)
        fail(ErrorCode::degenerate, "critical points: fewer than two extrema found");
    return out;
}

}  // namespace lentil
