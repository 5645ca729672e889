#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lentil/boundary.hpp"
#include "lentil/field.hpp"
#include "lentil/geometry.hpp"

namespace lentil {

struct SpacetimeSource
{
    Vec2 position;
    double time = 0.0;
    std::int64_t id = 0;  // ground truth only
};

struct ArrivalSample
{
    double param = 0.0;  // boundary arclength
    double time = 0.0;
};

struct CloudHeader
{
    std::int64_t grid_size = 0;
    double boundary_length = 0.0;
    double t_min = 0.0;
    double t_max = 0.0;
    std::string manifold_hash;
    std::uint64_t seed = 0;
    double noise_amplitude = 0.0;

    nlohmann::json to_json() const;
    static CloudHeader from_json(const nlohmann::json& j);
    BoundaryGrid grid() const { return BoundaryGrid(grid_size, boundary_length); }
};

// Unlabeled arrival data: samples carry no association to sources.
struct ArrivalCloud
{
    CloudHeader header;
    std::vector<ArrivalSample> samples;
};

// Relative spatial density of sources w.r.t. Riemannian volume. Must be
// bounded above and away from zero on the disk.
struct SourceDensity
{
    SpeedFieldPtr weight;  // null means uniform
    static SourceDensity uniform() { return {}; }
    static SourceDensity expression(const std::string& expr);
};

struct PoissonSpec
{
    double intensity = 1.0;  // events per unit volume per unit time
    double t_min = 0.0;
    double t_max = 1.0;
    SourceDensity density;
    double margin_rel = 1e-3;  // interior margin as a fraction of the diameter
};

// Riemannian area of the disk.
double riemannian_volume(const ManifoldModel& model);

std::vector<SpacetimeSource> poisson_sources(const ManifoldModel& model, const PoissonSpec& spec,
                                             std::uint64_t seed);

struct ForwardSpec
{
    std::int64_t grid_size = 1024;
    double t_min = 0.0;
    double t_max = std::numeric_limits<double>::infinity();
    std::uint64_t seed = 0;
    double noise_amplitude = 0.0;
};

// Arrival samples (node param, tau + d(node, p)) for every node and source
// with time in the window, shuffled by the seed.
ArrivalCloud forward(const ManifoldModel& model, const std::vector<SpacetimeSource>& sources,
                     const ForwardSpec& spec);

// Source set from a scene config: {"sources":[{"x","y","tau"}...]} or
// {"poisson":{"intensity","T" | "t_min","t_max","density"?,"margin_rel"?}}.
std::vector<SpacetimeSource> sources_from_json(const ManifoldModel& model, const nlohmann::json& j,
                                               std::uint64_t seed);

// Cloud files: <stem>.csv with columns boundary_param,time and the header as
// JSON next to it (same stem, .json extension).
std::string cloud_header_path(const std::string& csv_path);
void write_cloud(const std::string& csv_path, const ArrivalCloud& cloud);
ArrivalCloud read_cloud(const std::string& csv_path);

// Ground-truth sidecar (id,x,y,tau). Evaluation only.
void write_truth(const std::string& path, const std::vector<SpacetimeSource>& sources);
std::vector<SpacetimeSource> read_truth(const std::string& path);

}  // namespace lentil
