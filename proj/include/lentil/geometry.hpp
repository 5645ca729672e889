#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lentil/boundary.hpp"
#include "lentil/field.hpp"
#include "lentil/vec2.hpp"

namespace lentil {

enum class ModelKind
{
    euclidean_disk,
    curved_disk,
    conformal_disk,
};

// Tangent vectors are given in the orthonormal frame c(x)*d/dx_i, so their
// Euclidean norm is the metric norm and their angle is the coordinate angle.
using TangentVector = Vec2;

// Jacobi field j'' = -K j along a unit speed geodesic with j(0)=0, j'(0)=1.
struct JacobiTrace
{
    std::vector<double> t;
    std::vector<double> j;
    std::vector<double> dj;
};

struct SimplicityReport
{
    bool convex = true;              // geodesic curvature of the boundary > 0
    bool no_fold = true;             // exit maps monotone in the shooting angle
    double min_boundary_curvature = 0.0;
    double max_roundtrip_error = 0.0;  // log(exp(v)) vs v
    bool ok() const { return convex && no_fold; }
};

// A simple 2-D disk with metric g = c(x)^{-2} |dx|^2 on |x| <= radius.
// Immutable; all queries are thread-safe.
class ManifoldModel
{
  public:
    static ManifoldModel euclidean_disk(double radius);
    // Conformal model of constant curvature kappa, c = (1 + kappa |x|^2)/2.
    static ManifoldModel curved_disk(double kappa, double radius);
    static ManifoldModel conformal_disk(SpeedFieldPtr speed, double radius);
    static ManifoldModel from_json(const nlohmann::json& j);

    nlohmann::json to_json() const;
    // FNV-1a of the canonical JSON form.
    std::uint64_t hash() const;
    std::string hash_hex() const;

    ModelKind kind() const;
    int dimension() const { return 2; }
    double radius() const;
    double kappa() const;
    // Metric lengths of this model equal those of the unscaled model times f.
    ManifoldModel scaled(double f) const;
    // Copy that answers distance/exp/log by numerical shooting even when a
    // closed form exists.
    ManifoldModel with_shooting() const;

    Jet2 speed(Vec2 p) const;
    double gauss_curvature(Vec2 p) const;
    bool contains(Vec2 p) const;

    double boundary_length() const;
    double diameter() const;
    // Solver tolerance on lengths: tol_dist_rel * diameter.
    double tol_dist() const;
    ManifoldModel with_tolerance(double tol_dist_rel) const;

    // Unit speed (in metric arclength) parametrization of the boundary.
    Vec2 boundary_point(double s) const;
    double boundary_param(Vec2 on_boundary) const;
    std::vector<Vec2> boundary_nodes(const BoundaryGrid& grid) const;
    BoundaryGrid grid(std::int64_t n) const;

    double distance(Vec2 p, Vec2 q) const;
    TangentVector log_map(Vec2 x, Vec2 y) const;
    // Empty when the geodesic leaves the disk before time |v|.
    std::optional<Vec2> exp_map(Vec2 x, TangentVector v) const;
    // Point at metric distance t from x on the geodesic toward y.
    Vec2 geodesic_point(Vec2 x, Vec2 y, double t) const;
    double distance_to_boundary(Vec2 p) const;
    // Arclength parameter of a boundary point nearest to p.
    double nearest_boundary_param(Vec2 p) const;

    std::vector<double> boundary_distance_function(Vec2 p, const BoundaryGrid& grid) const;
    // Geodesic curvature of the boundary w.r.t. the inward normal (h2/h1),
    // measured from the deviation of the tangent geodesic.
    double second_fundamental_form(double s) const;
    JacobiTrace jacobi_field(Vec2 x, double theta, double t_max, int samples) const;
    SimplicityReport check_simplicity(int boundary_samples, int fan_size) const;

    struct Impl;

  private:
    explicit ManifoldModel(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<const Impl> impl_;
};

std::string to_string(ModelKind k);

}  // namespace lentil
