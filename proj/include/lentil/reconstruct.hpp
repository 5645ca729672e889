#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lentil/boundary.hpp"
#include "lentil/constants.hpp"
#include "lentil/extended.hpp"
#include "lentil/observables.hpp"
#include "lentil/tolerances.hpp"

namespace lentil {

// ---------------------------------------------------------------------------
// Data side: everything here sees only the recovered space and constants.

struct CriticalEstimate
{
    GridParam where;
    CriticalKind kind = CriticalKind::minimum;
    double lambda = 0.0;        // boundary Hessian of a_p at the critical point
    double lambda_error = 0.0;  // stencil error estimate
    ExtLength e;                // C_JF / (lambda - C_SFF) or infinity
    double e_allowance = 0.0;   // first-order effect of lambda_error on e
};

// Quantities that do not depend on epsilon_1.
struct ProximityData
{
    BoundaryGrid grid;
    std::vector<std::vector<CriticalEstimate>> critical;  // per source
    std::vector<ExtLength> min_e;                         // per source, min over y
    std::vector<ExtLength> e_node;                        // E(x) per grid node
    std::vector<std::size_t> alpha;                       // minimizer per node; empty if E infinite everywhere
    ExtLength e_global;                                   // max over nodes
};

ExtLength proximity_e(double lambda, const GeometryConstants& gc);
ProximityData proximity(const DiscreteSpace& space, const GeometryConstants& gc, const Tolerances& tol);

std::vector<std::size_t> gamma_set(const ProximityData& p, double epsilon1);

// Worst over nodes of min over p in gamma, y in c(p) of E(p,y) + d_bdry(x,y).
// The data-side guarantee that every boundary label has a member of gamma
// within epsilon_2.
ExtLength gamma_cover(const ProximityData& p, const std::vector<std::size_t>& gamma);

struct LentilTest
{
    std::size_t x = 0, y = 0;
    double r = 0.0, s = 0.0, delta = 0.0;
    std::optional<std::size_t> witness;
};

struct CertificateReport
{
    std::size_t pairs = 0;          // pairs of gamma with d(x,y) > delta
    std::size_t pairs_skipped = 0;  // pairs with d(x,y) <= delta
    std::size_t tested = 0;
    std::size_t failed = 0;
    bool complete = true;  // false if testing stopped at the first failure
    std::vector<LentilTest> failures;  // up to max_listed
    bool pass() const { return failed == 0; }
    nlohmann::json to_json() const;
};

// r takes r_grid values (delta + (d - delta) (i+1)/(r_grid+1)), s = d - r + delta.
CertificateReport lentil_certificates(const DiscreteSpace& space, const std::vector<std::size_t>& gamma, double delta,
                                      int r_grid, bool stop_at_first_failure = false, std::size_t max_listed = 50);

ExtLength density_bound(ExtLength epsilon2, const GeometryConstants& gc);
ExtLength lgh_bound(ExtLength epsilon2, const GeometryConstants& gc);

enum class ReconstructStatus
{
    certified,
    not_certified,
    one_point,
};
std::string to_string(ReconstructStatus s);

struct ReconstructReport
{
    double epsilon1 = 0.0;
    ExtLength e_global;
    ExtLength epsilon2;
    ExtLength delta;
    std::vector<std::size_t> gamma;
    ExtLength gamma_cover;
    CertificateReport certificates;
    ExtLength epsilon_bound;
    ExtLength lgh;
    double grid_slack = 0.0;  // labels are grid nodes: one spacing of extra lGH slack
    ReconstructStatus status = ReconstructStatus::not_certified;
    std::string reason;
    std::vector<std::size_t> alpha;
    std::vector<std::string> estimated_constants;
    std::size_t points = 0;
    std::vector<double> sweep_epsilon1;  // values tried by the sweep, if any

    nlohmann::json to_json() const;
};

ReconstructReport reconstruct(const DiscreteSpace& space, const ProximityData& prox, const GeometryConstants& gc,
                              double epsilon1, const Tolerances& tol);
// Log grid of epsilon_1 between the smallest and largest finite E(p,y); the
// bound grows with epsilon_1, so the first certified value is the best.
ReconstructReport reconstruct_sweep(const DiscreteSpace& space, const ProximityData& prox,
                                    const GeometryConstants& gc, const Tolerances& tol, int grid_count = 32);

// Report for a space with no recovered point: P is a single point and the
// bound falls back to the diameter.
ReconstructReport one_point_report(const GeometryConstants& gc, const BoundaryGrid& grid, const std::string& why);

// Full chain from a cloud: separate, keep complete graphs, dedupe, assemble,
// sweep. Empty or graph-less data gives the one-point space.
struct PipelineResult
{
    SeparationResult separation;
    std::optional<DiscreteSpace> space;
    std::vector<std::size_t> merged_into;  // dedupe map from separated to space index
    std::optional<ProximityData> prox;
    ReconstructReport report;
};
PipelineResult run_pipeline(const ArrivalCloud& cloud, const GeometryConstants& gc, const Tolerances& tol,
                            std::optional<double> epsilon1 = std::nullopt);

struct WindowResult
{
    double t = 0.0;
    std::size_t samples = 0;
    std::size_t complete_graphs = 0;
    PipelineResult result;
};
std::vector<WindowResult> window_reconstruct(const ArrivalCloud& cloud, const std::vector<double>& t_list,
                                             const GeometryConstants& gc, const Tolerances& tol);

// ---------------------------------------------------------------------------
// Evaluation side: needs the model and ground truth.

// A point set in the disk, possibly implicit.
class PointSet
{
  public:
    virtual ~PointSet() = default;
    // Calls f for every point within coordinate distance `radius` of q.
    virtual void near(Vec2 q, double radius, const std::function<void(Vec2)>& f) const = 0;
    // Calls f for every point with |p| >= r_min (coordinate annulus).
    virtual void outer(double r_min, const std::function<void(Vec2)>& f) const = 0;
    virtual std::size_t size_estimate() const = 0;
};

class ExplicitPointSet : public PointSet
{
  public:
    explicit ExplicitPointSet(std::vector<Vec2> pts) : pts_(std::move(pts)) {}
    void near(Vec2 q, double radius, const std::function<void(Vec2)>& f) const override;
    void outer(double r_min, const std::function<void(Vec2)>& f) const override;
    std::size_t size_estimate() const override { return pts_.size(); }
    const std::vector<Vec2>& points() const { return pts_; }

  private:
    std::vector<Vec2> pts_;
};

// Triangular lattice of the given spacing (coordinates), clipped to |p| < radius.
class TriangularLattice : public PointSet
{
  public:
    TriangularLattice(double spacing, double radius, Vec2 offset = Vec2());
    void near(Vec2 q, double radius, const std::function<void(Vec2)>& f) const override;
    void outer(double r_min, const std::function<void(Vec2)>& f) const override;
    std::size_t size_estimate() const override;
    double spacing() const { return a_; }

  private:
    double a_, radius_;
    Vec2 offset_;
};

// Largest distance from a sample of M (random interior points plus the
// boundary) to the nearest point of P.
struct DensityMeasurement
{
    double density = 0.0;
    Vec2 worst;
    std::size_t samples = 0;
};
DensityMeasurement measure_density(const ManifoldModel& model, const PointSet& pts, std::size_t samples,
                                   std::uint64_t seed);
DensityMeasurement measure_density(const ManifoldModel& model, const std::vector<Vec2>& pts, std::size_t samples,
                                   std::uint64_t seed);

// Boundary Hessian of r_p at its nearest boundary point by adaptive finite
// differences of model distances.
struct ModelHessian
{
    double param = 0.0;
    double depth = 0.0;
    double lambda = 0.0;
};
ModelHessian model_boundary_hessian(const ManifoldModel& model, Vec2 p);

struct ReverseSpec
{
    double epsilon = 0.8;
    std::size_t density_samples = 10000;
    std::size_t pair_samples = 20000;
    int r_grid = 32;
    std::int64_t fine_grid = 65536;
    std::uint64_t seed = 1;
};

struct ReverseReport
{
    double epsilon = 0.0;
    double epsilon_hat = 0.0;
    std::string hat_branch;  // "C25", "C26*eps" or "C27*eps^2"
    DensityMeasurement density;
    bool applicable = false;
    double epsilon1 = 0.0;
    double e_global = 0.0;
    double epsilon2 = 0.0;
    double delta = 0.0;
    double bound = 0.0;  // C12 eps2 + C11 sqrt(eps2)
    bool bound_ok = false;
    std::size_t gamma_size = 0;
    std::size_t pairs_sampled = 0;
    std::size_t lentils_tested = 0;
    std::size_t lentils_failed = 0;
    std::size_t band_points = 0;
    std::string status;  // PASS, FAIL, NOT-APPLICABLE
    nlohmann::json to_json() const;
};
ReverseReport reverse_check(const ManifoldModel& model, const PointSet& pts, const GeometryConstants& gc,
                            const ReverseSpec& spec);

struct LentilGeometrySpec
{
    std::size_t lentils = 500;
    std::size_t cover_points = 200;
    int boundary_rays = 64;
    double epsilon1 = 0.02;
    double epsilon2 = 0.05;
    std::uint64_t seed = 1;
};

struct LentilGeometryReport
{
    std::size_t lentils = 0;
    std::size_t diameter_fail = 0;
    std::size_t midpoint_fail = 0;
    std::size_t ball_fail = 0;
    std::size_t transversal_fail = 0;
    std::size_t cover_points = 0;
    std::size_t geodesic_fail = 0;  // dense-geodesics: no pair passes within C_d eps2
    std::size_t cover_fail = 0;
    double worst_diameter_ratio = 0.0;     // sampled diam / (delta + C_e sqrt(delta))
    double worst_transversal_ratio = 0.0;  // bound / R (must be < 1)
    bool pass() const
    {
        return diameter_fail + midpoint_fail + ball_fail + transversal_fail + geodesic_fail + cover_fail == 0;
    }
    nlohmann::json to_json() const;
};
LentilGeometryReport lentil_geometry_checks(const ManifoldModel& model, const GeometryConstants& gc,
                                            const LentilGeometrySpec& spec);

}  // namespace lentil
