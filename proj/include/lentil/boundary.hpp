#pragma once

#include <cstdint>
#include <vector>

namespace lentil {

// Position on a boundary grid: node index plus a fractional offset toward the
// next node. Kept split so that cyclic shifts of the grid act exactly.
struct GridParam
{
    std::int64_t node = 0;
    double frac = 0.0;  // in [0, 1)
};

// Uniform grid of n nodes in boundary arclength, total length `length`.
class BoundaryGrid
{
  public:
    BoundaryGrid() = default;
    BoundaryGrid(std::int64_t n, double length);

    std::int64_t size() const { return n_; }
    double length() const { return length_; }
    double spacing() const { return length_ / static_cast<double>(n_); }

    double param(std::int64_t node) const;
    double param(GridParam g) const;
    std::int64_t wrap(std::int64_t node) const;
    // Nearest node to an arclength parameter (wrapped).
    std::int64_t nearest_node(double s) const;
    GridParam locate(double s) const;
    // Normalizes frac into [0,1) and wraps node.
    GridParam normalize(std::int64_t node, double frac) const;

    // Intrinsic boundary distance (shorter arc).
    double arc_distance(std::int64_t a, std::int64_t b) const;
    double arc_distance(std::int64_t a, GridParam b) const;
    double arc_distance(GridParam a, GridParam b) const;

  private:
    std::int64_t n_ = 0;
    double length_ = 0.0;
};

// Second derivative in arclength of a sampled function with an error
// estimate from comparing stencils of width h and 2h.
struct HessianEstimate
{
    double value = 0.0;
    double error = 0.0;
};

// Values on every grid node; NaN marks nodes outside the function's support.
using SampledFunction = std::vector<double>;

// Central second difference with half-width `h_nodes` grid steps, evaluated
// at x (linear blend of the two neighbouring nodes). Throws when the stencil
// touches a NaN node.
HessianEstimate boundary_hessian(const SampledFunction& f, const BoundaryGrid& grid, GridParam x,
                                 int h_nodes, bool richardson);

enum class CriticalKind
{
    minimum,
    maximum,
};

struct CriticalPoint
{
    GridParam where;
    double value = 0.0;
    CriticalKind kind = CriticalKind::minimum;
};

// Grid-local extrema refined by quadratic interpolation. Throws
// ErrorCode::degenerate for a flat function or fewer than two extrema.
std::vector<CriticalPoint> critical_points(const SampledFunction& f, const BoundaryGrid& grid);

// Quadratic interpolation of a cyclic sampled function at a grid position.
double interpolate(const SampledFunction& f, const BoundaryGrid& grid, GridParam x);

}  // namespace lentil
