#include "lentil/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lentil/error.hpp"
#include "lentil/parallel.hpp"

namespace lentil {

std::vector<std::vector<double>> truth_functions(const ManifoldModel& model, const std::vector<SpacetimeSource>& truth,
                                                 const BoundaryGrid& grid)
{
    std::vector<std::vector<double>> out(truth.size());
    parallel_for(truth.size(), [&](std::size_t i) {
        out[i] = model.boundary_distance_function(truth[i].position, grid);
        for (auto& v : out[i])
            v += truth[i].time;
    });
    return out;
}

SourceMatch match_sources(const std::vector<ArrivalFunction>& functions,
                          const std::vector<std::vector<double>>& truth_fns)
{
    require(!truth_fns.empty() || functions.empty(), ErrorCode::invalid_argument,
            "match_sources: recovered points but no ground truth");
    SourceMatch m;
    m.truth_of.resize(functions.size());
    m.residual.resize(functions.size());
    parallel_for(functions.size(), [&](std::size_t i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < truth_fns.size(); ++t)
        {
            const auto& a = functions[i].values;
            const auto& b = truth_fns[t];
            require(a.size() == b.size(), ErrorCode::invalid_argument, "match_sources: grid size mismatch");
            double e = 0;
            for (std::size_t k = 0; k < a.size() && e < best; ++k)
                e = std::max(e, std::abs(a[k] - b[k]));
            if (e < best)
                best = e, m.truth_of[i] = t;
        }
        m.residual[i] = best;
    });
    for (double r : m.residual)
        m.worst_residual = std::max(m.worst_residual, r);
    return m;
}

nlohmann::json DistanceCheck::to_json() const
{
    return {{"pairs", pairs},
            {"max_distance_error", max_distance_error},
            {"max_time_error", max_time_error},
            {"distance_tol", distance_tol},
            {"time_tol", time_tol},
            {"pass", pass}};
}

DistanceCheck check_distances(const DiscreteSpace& space, const SourceMatch& match,
                              const std::vector<SpacetimeSource>& truth, const ManifoldModel& model)
{
    require(match.truth_of.size() == space.size(), ErrorCode::invalid_argument,
            "check_distances: match does not cover the space");
    DistanceCheck c;
    const std::size_t n = space.size();
    c.distance_tol = 2.0 * space.grid().spacing() + 3.0 * model.tol_dist();
    c.time_tol = space.obs_tolerance();
    std::vector<double> de(n, 0.0), te(n, 0.0);
    parallel_for(n, [&](std::size_t r) {
        const auto& a = truth[match.truth_of[r]];
        for (std::size_t s = r + 1; s < n; ++s)
        {
            const auto& b = truth[match.truth_of[s]];
            de[r] = std::max(de[r], std::abs(space.dist(r, s) - model.distance(a.position, b.position)));
            te[r] = std::max(te[r], std::abs(space.time_diff(r, s) - (a.time - b.time)));
        }
    });
    c.pairs = n * (n - 1) / 2;
    c.max_distance_error = n ? *std::max_element(de.begin(), de.end()) : 0.0;
    c.max_time_error = n ? *std::max_element(te.begin(), te.end()) : 0.0;
    c.pass = c.max_distance_error <= c.distance_tol && c.max_time_error <= c.time_tol;
    return c;
}

bool SceneEvaluation::pass() const
{
    const bool assoc = association.accuracy == 1.0;
    const bool dist = !distances || distances->pass;
    return assoc && dist && density_ok && lgh_ok;
}

nlohmann::json SceneEvaluation::to_json() const
{
    nlohmann::json j;
    j["sources"] = sources;
    j["association"] = {{"accuracy", association.accuracy},
                        {"samples", association.samples},
                        {"correct", association.correct}};
    j["match_worst_residual"] = match.worst_residual;
    j["distances"] = distances ? distances->to_json() : nlohmann::json(nullptr);
    j["report"] = report.to_json();
    if (density)
        j["density"] = {{"measured", density->density},
                        {"samples", density->samples},
                        {"worst", {density->worst.x, density->worst.y}},
                        {"ok", density_ok}};
    else
        j["density"] = nullptr;
    if (lgh)
    {
        j["sampled_lgh"] = lgh->to_json();
        j["sampled_lgh"]["ok"] = lgh_ok;
    }
    else
        j["sampled_lgh"] = nullptr;
    j["pass"] = pass();
    return j;
}

SceneEvaluation evaluate_scene(const ArrivalCloud& cloud, const std::vector<SpacetimeSource>& truth,
                               const ManifoldModel& model, const GeometryConstants& gc, const Tolerances& tol,
                               const EvaluateSpec& spec)
{
    SceneEvaluation ev;
    ev.sources = truth.size();
    const auto grid = cloud.header.grid();
    const auto all_fns = truth_functions(model, truth, grid);

    // Only sources whose whole graph lies in the window can be recovered.
    std::vector<std::vector<double>> complete;
    for (const auto& f : all_fns)
    {
        const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
        if (*lo >= cloud.header.t_min && *hi <= cloud.header.t_max)
            complete.push_back(f);
    }

    const auto res = run_pipeline(cloud, gc, tol, spec.epsilon1);
    const double match_tol = obs_tol(grid, tol) + 4.0 * cloud.header.noise_amplitude;
    ev.association = association_accuracy(res.separation, complete, match_tol);
    ev.report = res.report;
    if (!res.space)
        return ev;

    ev.match = match_sources(res.space->functions(), all_fns);
    ev.distances = check_distances(*res.space, ev.match, truth, model);

    if (res.report.epsilon_bound.is_finite() && res.report.status == ReconstructStatus::certified)
    {
        std::vector<Vec2> pts;
        for (auto t : ev.match.truth_of)
            pts.push_back(truth[t].position);
        ev.density = measure_density(model, pts, spec.density_samples, spec.seed);
        ev.density_ok = ev.density->density <= res.report.epsilon_bound.value();
    }
    if (!res.report.alpha.empty() && spec.lgh_samples > 0)
    {
        ev.lgh = sampled_lgh_vs_manifold(*res.space, res.report.alpha, model, spec.lgh_samples, spec.seed + 7);
        if (res.report.lgh.is_finite())
            ev.lgh_ok = ev.lgh->bounds.lower <= res.report.lgh.value() + ev.lgh->sampling_slack + ev.lgh->grid_slack;
    }
    return ev;
}

}  // namespace lentil
