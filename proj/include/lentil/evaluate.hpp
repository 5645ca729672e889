#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "lentil/constants.hpp"
#include "lentil/disentangle.hpp"
#include "lentil/geometry.hpp"
#include "lentil/metricspace.hpp"
#include "lentil/reconstruct.hpp"
#include "lentil/scene.hpp"

namespace lentil {

// Ground-truth side of a run. Nothing in here is reachable from the
// inversion path; it only compares finished outputs with the sidecar.

// Arrival function of every true source on the grid.
std::vector<std::vector<double>> truth_functions(const ManifoldModel& model, const std::vector<SpacetimeSource>& truth,
                                                 const BoundaryGrid& grid);

// Recovered point i came from truth[truth_of[i]] (closest arrival function in
// max norm); residual[i] is that distance.
struct SourceMatch
{
    std::vector<std::size_t> truth_of;
    std::vector<double> residual;
    double worst_residual = 0.0;
};
SourceMatch match_sources(const std::vector<ArrivalFunction>& functions,
                          const std::vector<std::vector<double>>& truth_fns);

struct DistanceCheck
{
    std::size_t pairs = 0;
    double max_distance_error = 0.0;
    double max_time_error = 0.0;
    double distance_tol = 0.0;  // 2 h + 3 tol_dist
    double time_tol = 0.0;      // obs_tol
    bool pass = false;
    nlohmann::json to_json() const;
};
DistanceCheck check_distances(const DiscreteSpace& space, const SourceMatch& match,
                              const std::vector<SpacetimeSource>& truth, const ManifoldModel& model);

struct EvaluateSpec
{
    std::size_t density_samples = 10000;
    std::size_t lgh_samples = 200;
    std::uint64_t seed = 1;
    std::optional<double> epsilon1;  // fixed epsilon_1; sweep when empty
};

struct SceneEvaluation
{
    std::size_t sources = 0;
    AssociationReport association;
    SourceMatch match;
    std::optional<DistanceCheck> distances;
    ReconstructReport report;
    // True density of the recovered points in M; only meaningful with a
    // finite certified bound.
    std::optional<DensityMeasurement> density;
    bool density_ok = true;
    std::optional<SampledLgh> lgh;
    bool lgh_ok = true;
    bool pass() const;
    nlohmann::json to_json() const;
};
SceneEvaluation evaluate_scene(const ArrivalCloud& cloud, const std::vector<SpacetimeSource>& truth,
                               const ManifoldModel& model, const GeometryConstants& gc, const Tolerances& tol,
                               const EvaluateSpec& spec);

}  // namespace lentil
