#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lentil/geometry.hpp"
#include "lentil/observables.hpp"

namespace lentil {

// Finite metric space with labels: label id -> point index.
class LabeledMetricSpace
{
  public:
    LabeledMetricSpace() = default;
    LabeledMetricSpace(std::size_t n, std::vector<double> dist, std::map<std::int64_t, std::size_t> labels = {});

    std::size_t size() const { return n_; }
    double dist(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
    const std::map<std::int64_t, std::size_t>& labels() const { return labels_; }
    double diameter() const;
    // Largest triangle-inequality violation (0 for a metric).
    double metric_defect() const;

    LabeledMetricSpace without_labels() const { return LabeledMetricSpace(n_, d_); }

    // {n, dist: strict lower triangle row by row, labels: [{label_id, point_index}]}
    nlohmann::json to_json() const;
    static LabeledMetricSpace from_json(const nlohmann::json& j);
    // Recovered space labelled by boundary grid node through alpha.
    static LabeledMetricSpace from_space(const DiscreteSpace& space, const std::vector<std::size_t>& alpha);

  private:
    std::size_t n_ = 0;
    std::vector<double> d_;
    std::map<std::int64_t, std::size_t> labels_;
};

// A correspondence as (x, y) index pairs.
using Correspondence = std::vector<std::pair<std::size_t, std::size_t>>;

// Smallest value of d_H + sup over labels of the label displacement over all
// metrics on X u Y in which every pair of R is within d_H. Gluing along R and
// the label pairs shows this equals max(dis(R)/2 + B, C(R)), where
// B = max over label pairs of |dX - dY| / 2 and C(R) is the largest
// |dX(x, alpha l) - dY(y, beta l)| over (x,y) in R.
double correspondence_cost(const LabeledMetricSpace& x, const LabeledMetricSpace& y, const Correspondence& r);

constexpr std::size_t lgh_exact_limit = 6;

// Exact labeled GH distance by branch and bound over minimal correspondences.
// Both spaces must have at most lgh_exact_limit points.
double lgh_exact(const LabeledMetricSpace& x, const LabeledMetricSpace& y);
// Distortion and label-profile relaxation; exact for small spaces.
double lgh_lower(const LabeledMetricSpace& x, const LabeledMetricSpace& y, std::size_t label_subsample = 256);
// Cost of an explicit greedy correspondence.
double lgh_upper(const LabeledMetricSpace& x, const LabeledMetricSpace& y);

struct LghBounds
{
    double lower = 0.0;
    double upper = 0.0;
    bool exact = false;
    nlohmann::json to_json() const;
};
LghBounds lgh_bounds(const LabeledMetricSpace& x, const LabeledMetricSpace& y);

// Recovered space against a finite snapshot of the model: sample_n random
// points plus the boundary grid, the grid nodes carrying their own labels.
struct SampledLgh
{
    LghBounds bounds;
    std::size_t sample_n = 0;
    double sampling_slack = 0.0;  // measured density of the snapshot in M
    double grid_slack = 0.0;      // labels are grid nodes, not all of the boundary
    nlohmann::json to_json() const;
};
SampledLgh sampled_lgh_vs_manifold(const DiscreteSpace& space, const std::vector<std::size_t>& alpha,
                                   const ManifoldModel& model, std::size_t sample_n, std::uint64_t seed);
// Same comparison for an arbitrary point set of the model (the snapshot
// side of the test fixtures).
LabeledMetricSpace model_snapshot(const ManifoldModel& model, const std::vector<Vec2>& interior,
                                  const BoundaryGrid& grid);

}  // namespace lentil
