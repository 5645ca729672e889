#include <doctest.h>

#include <random>

#include "lentil/evaluate.hpp"

using namespace lentil;

namespace {

std::vector<SpacetimeSource> random_sources(const ManifoldModel& m, int n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<SpacetimeSource> src;
    for (int i = 0; i < n; ++i)
    {
        const double r = 0.9 * m.radius() * std::sqrt(u(rng)), t = two_pi * u(rng);
        src.push_back({unit_from_angle(t) * r, 2 * u(rng), i});
    }
    return src;
}

}  // namespace

TEST_CASE("evaluate: 20 sources on the unit disk")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    const auto gc = derive(euclidean_disk_constants(1.0));
    const auto src = random_sources(m, 20, 3);
    ForwardSpec fs;
    fs.grid_size = 1024;
    const auto cloud = forward(m, src, fs);
    EvaluateSpec spec;
    spec.density_samples = 2000;
    spec.lgh_samples = 100;
    const auto ev = evaluate_scene(cloud, src, m, gc, Tolerances{}, spec);
    CHECK(ev.association.accuracy == 1.0);
    REQUIRE(ev.distances);
    CHECK(ev.distances->pairs == 190);
    CHECK(ev.distances->pass);
    CHECK(ev.distances->max_distance_error <= ev.distances->distance_tol);
    CHECK(ev.match.worst_residual < 1e-9);
    // Every source recovered once.
    auto seen = ev.match.truth_of;
    std::sort(seen.begin(), seen.end());
    CHECK(std::unique(seen.begin(), seen.end()) == seen.end());
    CHECK(ev.lgh_ok);
    CHECK(ev.to_json().at("pass").get<bool>() == ev.pass());
}

TEST_CASE("evaluate: time window drops incomplete graphs from the association count")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    const auto gc = derive(euclidean_disk_constants(1.0));
    const auto src = random_sources(m, 10, 4);
    ForwardSpec fs;
    fs.grid_size = 512;
    fs.t_max = 2.0;
    const auto cloud = forward(m, src, fs);
    EvaluateSpec spec;
    spec.density_samples = 500;
    spec.lgh_samples = 0;
    const auto ev = evaluate_scene(cloud, src, m, gc, Tolerances{}, spec);
    CHECK(ev.association.accuracy == 1.0);
    CHECK_FALSE(ev.lgh);
    if (ev.distances)
        CHECK(ev.distances->pass);
}
