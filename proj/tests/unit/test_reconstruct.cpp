#include <doctest.h>

#include <cmath>
#include <random>

#include "lentil/error.hpp"
#include "lentil/reconstruct.hpp"
#include "lentil/scene.hpp"

using namespace lentil;

namespace {

const GeometryConstants& unit_gc()
{
    static const GeometryConstants gc = derive(euclidean_disk_constants(1.0));
    return gc;
}

DiscreteSpace space_of(const ManifoldModel& m, std::int64_t n, const std::vector<Vec2>& pts,
                       std::vector<double> taus = {})
{
    const auto g = m.grid(n);
    CloudHeader h;
    h.grid_size = g.size();
    h.boundary_length = g.length();
    std::vector<ArrivalFunction> fs;
    for (std::size_t i = 0; i < pts.size(); ++i)
    {
        auto v = m.boundary_distance_function(pts[i], g);
        const double tau = taus.empty() ? 0.0 : taus[i];
        for (auto& x : v)
            x += tau;
        fs.push_back({v, static_cast<std::int64_t>(i)});
    }
    return DiscreteSpace::assemble(fs, h, Tolerances{});
}

// Depth d in the unit disk: r_p'' at the nearest point is 1/d - 1 (the
// chord length |x - p| in the boundary angle), and E = 1/(lambda - 1).
double analytic_e(double d) { return 1.0 / (1.0 / d - 2.0); }

}  // namespace

TEST_CASE("reconstruct: proximity formula and branches")
{
    const auto& gc = unit_gc();
    CHECK(gc.base.jf == 1.0);
    CHECK(gc.base.sff == 1.0);
    CHECK(proximity_e(9.0, gc).value() == doctest::Approx(0.125));
    CHECK(proximity_e(1.0, gc).is_infinite());
    CHECK(proximity_e(0.5, gc).is_infinite());
    CHECK(proximity_e(-3.0, gc).is_infinite());
}

TEST_CASE("reconstruct: E(p,y) and gamma on the unit disk")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    const auto sp = space_of(m, 4096, {Vec2(0.95, 0), Vec2(-0.5, 0), Vec2(0, 0.1)});
    const auto p = proximity(sp, unit_gc(), Tolerances{});
    REQUIRE(p.min_e[0].is_finite());
    CHECK(p.min_e[0].value() == doctest::Approx(analytic_e(0.05)).epsilon(0.02));
    // lambda = 1 for depth 0.5 and ~0.11 for depth 0.9: both at or below C_SFF.
    CHECK(p.min_e[1].is_infinite());
    CHECK(p.min_e[2].is_infinite());
    // The minimum sits at the nearest boundary point; maxima have negative lambda.
    for (const auto& c : p.critical[0])
    {
        if (c.kind == CriticalKind::maximum)
            CHECK(c.e.is_infinite());
        else
            CHECK(std::abs(std::remainder(p.grid.param(c.where), two_pi)) < 2 * p.grid.spacing());
    }

    CHECK(gamma_set(p, 0.1) == std::vector<std::size_t>{0});
    CHECK(gamma_set(p, 0.0).empty());
    CHECK(gamma_set(p, 1e300) == std::vector<std::size_t>{0});

    // Every node is reached from source 0 alone; E(x) is exactly E + arc.
    REQUIRE(p.e_global.is_finite());
    CHECK(p.e_global.value() == doctest::Approx(p.min_e[0].value() + pi).epsilon(1e-3));
    for (std::size_t k = 0; k < p.e_node.size(); k += 97)
        CHECK(p.alpha[k] == 0);
}

TEST_CASE("reconstruct: depth 0.1 example (lambda 9 with our sign, E 0.125)")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    const auto sp = space_of(m, 4096, {Vec2(0.9, 0)});
    const auto p = proximity(sp, unit_gc(), Tolerances{});
    const CriticalEstimate* min_cp = nullptr;
    for (const auto& c : p.critical[0])
        if (c.kind == CriticalKind::minimum)
            min_cp = &c;
    REQUIRE(min_cp);
    CHECK(min_cp->lambda == doctest::Approx(9.0).epsilon(1e-3));
    CHECK(min_cp->e.value() == doctest::Approx(0.125).epsilon(1e-3));
    CHECK(min_cp->e.value() >= 0.1);
}

TEST_CASE("reconstruct: soundness d <= E over random sources")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<Vec2> pts;
    for (int i = 0; i < 40; ++i)
    {
        const double r = 0.6 + 0.39 * u(rng);
        pts.push_back(unit_from_angle(two_pi * u(rng)) * r);
    }
    const auto sp = space_of(m, 2048, pts);
    const auto p = proximity(sp, unit_gc(), Tolerances{});
    const auto nodes = m.boundary_nodes(p.grid);
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (const auto& c : p.critical[i])
        {
            if (c.e.is_infinite())
                continue;
            const Vec2 y = m.boundary_point(p.grid.param(c.where));
            CHECK(norm(pts[i] - y) <= c.e.value() + 5 * c.e_allowance);
        }
    // E(x) >= d(alpha(x), x) at every node.
    for (std::size_t k = 0; k < nodes.size(); k += 13)
        if (p.e_node[k].is_finite())
            CHECK(norm(pts[p.alpha[k]] - nodes[k]) <= p.e_node[k].value() + 1e-6);
}

TEST_CASE("reconstruct: alpha splits between antipodal sources")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    const auto sp = space_of(m, 1024, {Vec2(0.95, 0), Vec2(-0.95, 0)});
    const auto p = proximity(sp, unit_gc(), Tolerances{});
    REQUIRE(p.alpha.size() == 1024);
    for (std::int64_t k = 0; k < 1024; ++k)
    {
        const double a = p.grid.param(k);
        if (std::cos(a) > 0.01)
            CHECK(p.alpha[static_cast<std::size_t>(k)] == 0);
        else if (std::cos(a) < -0.01)
            CHECK(p.alpha[static_cast<std::size_t>(k)] == 1);
    }
    const auto single = proximity(space_of(m, 1024, {Vec2(0.95, 0)}), unit_gc(), Tolerances{});
    CHECK(std::all_of(single.alpha.begin(), single.alpha.end(), [](std::size_t a) { return a == 0; }));
}

TEST_CASE("reconstruct: density and lgh bound arithmetic")
{
    const auto& gc = unit_gc();
    CHECK(density_bound(ExtLength(0.01), gc).value() == doctest::Approx(0.07 + 4 * std::sqrt(10 / pi) * 0.1));
    CHECK(density_bound(ExtLength(0.01), gc).value() == doctest::Approx(0.7836).epsilon(1e-4));
    CHECK(lgh_bound(ExtLength(0.01), gc).value() == doctest::Approx(0.08 + 4 * std::sqrt(10 / pi) * 0.1));
    CHECK(density_bound(ExtLength::infinity(), gc).is_infinite());
    CHECK(density_bound(ExtLength(0.0), gc).value() == 0.0);
    CHECK(lgh_bound(ExtLength(0.0), gc).value() == 0.0);
}

TEST_CASE("reconstruct: lentil certificates")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    // Two boundary-near sources: the lentils between them hold no point.
    const auto two = space_of(m, 1024, {Vec2(0.95, 0), Vec2(-0.95, 0)});
    auto rep = lentil_certificates(two, {0, 1}, 0.1, 8);
    CHECK(rep.pairs == 1);
    CHECK(rep.tested == 8);
    CHECK(rep.failed == 8);
    CHECK(!rep.pass());
    CHECK(!rep.failures.front().witness);
    CHECK(rep.failures.front().r + rep.failures.front().s - 1.9 ==
          doctest::Approx(0.1).epsilon(1e-3));

    // A pair closer than delta is skipped.
    rep = lentil_certificates(two, {0, 1}, 2.5, 8);
    CHECK(rep.pairs == 0);
    CHECK(rep.pairs_skipped == 1);
    CHECK(rep.tested == 0);
    CHECK(rep.pass());

    // One point on the segment covers only the lentils around it.
    const auto three = space_of(m, 1024, {Vec2(0.95, 0), Vec2(-0.95, 0), Vec2(0.1, 0)});
    rep = lentil_certificates(three, {0, 1}, 0.1, 16);
    CHECK(rep.tested == 16);
    CHECK(rep.failed > 0);  // lentils far from x = 0.1 are empty
    CHECK_THROWS_AS(lentil_certificates(three, {0, 1}, 0.0, 16), Error);
}

TEST_CASE("reconstruct: dense Poisson scene certifies")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<SpacetimeSource> src;
    for (int i = 0; i < 200; ++i)
    {
        Vec2 p;
        do
            p = Vec2(2 * u(rng) - 1, 2 * u(rng) - 1);
        while (norm(p) > 0.995);
        src.push_back({p, 3 * u(rng), i});
    }
    ForwardSpec fs;
    fs.grid_size = 1024;
    const auto cloud = forward(m, src, fs);
    const auto res = run_pipeline(cloud, unit_gc(), Tolerances{});
    REQUIRE(res.space);
    CHECK(res.space->size() == 200);
    CHECK(res.report.status == ReconstructStatus::certified);
    CHECK(res.report.certificates.tested > 0);
    REQUIRE(res.report.epsilon_bound.is_finite());
    const double eps = res.report.epsilon_bound.value();
    CHECK(res.report.delta.value() == doctest::Approx(unit_gc().c9 * res.report.epsilon2.value()));
    CHECK(res.report.epsilon2.value() == doctest::Approx(res.report.epsilon1 + res.report.e_global.value()));
    std::vector<Vec2> pts;
    for (const auto& s : src)
        pts.push_back(s.position);
    const auto dens = measure_density(m, pts, 2000, 1);
    CHECK(dens.density <= eps);
    // alpha lands within epsilon_2 of its label.
    const auto nodes = m.boundary_nodes(res.prox->grid);
    const auto& fs_out = res.space->functions();
    for (std::size_t k = 0; k < nodes.size(); k += 17)
    {
        const auto tag = fs_out[res.report.alpha[k]];
        // Identify the source by its arrival function.
        double best = 1e9;
        Vec2 where;
        for (const auto& s : src)
        {
            const double miss = std::abs(tag.values[0] - s.time - m.distance(s.position, nodes[0])) +
                                std::abs(tag.values[k] - s.time - m.distance(s.position, nodes[k]));
            if (miss < best)
                best = miss, where = s.position;
        }
        CHECK(best < 1e-6);
        CHECK(m.distance(where, nodes[k]) < res.report.epsilon2.value());
    }
    // Same data, fixed epsilon_1 far below every E(p,y): empty gamma cannot cover.
    const auto fixed = run_pipeline(cloud, unit_gc(), Tolerances{}, 0.0);
    CHECK(fixed.report.status == ReconstructStatus::not_certified);
    CHECK(fixed.report.gamma.empty());
}

TEST_CASE("reconstruct: windows and the one-point fallback")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    const std::vector<SpacetimeSource> src = {{Vec2(0.5, 0), 0.0, 0}, {Vec2(-0.3, 0.4), 1.0, 1},
                                              {Vec2(0.1, -0.8), 2.0, 2}};
    ForwardSpec fs;
    fs.grid_size = 512;
    const auto cloud = forward(m, src, fs);
    const auto w = window_reconstruct(cloud, {0.3, 1.6, 100.0}, unit_gc(), Tolerances{});
    REQUIRE(w.size() == 3);
    CHECK(w[0].complete_graphs == 0);
    CHECK(w[0].result.report.status == ReconstructStatus::one_point);
    // Glued cost of M against one point carrying every label: diam M.
    CHECK(w[0].result.report.lgh.value() == doctest::Approx(2.0));
    CHECK(w[1].complete_graphs == 1);
    CHECK(w[2].complete_graphs == 3);
    const auto full = run_pipeline(cloud, unit_gc(), Tolerances{});
    CHECK(full.report.to_json().dump() == w[2].result.report.to_json().dump());
    CHECK_THROWS_AS(window_reconstruct(cloud, {2.0, 1.0}, unit_gc(), Tolerances{}), Error);

    ArrivalCloud empty;
    empty.header = cloud.header;
    CHECK(run_pipeline(empty, unit_gc(), Tolerances{}).report.status == ReconstructStatus::one_point);
}

TEST_CASE("reconstruct: rotation by a node shift leaves E, gamma and certificates unchanged")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<SpacetimeSource> src;
    for (int i = 0; i < 30; ++i)
        src.push_back({unit_from_angle(two_pi * u(rng)) * (0.99 * std::sqrt(u(rng))), 2 * u(rng), i});
    ForwardSpec fs;
    fs.grid_size = 1024;
    const auto cloud = forward(m, src, fs);
    auto rotated = cloud;
    const std::int64_t shift = 301;
    const auto g = cloud.header.grid();
    for (auto& s : rotated.samples)
        s.param = g.param(g.wrap(g.nearest_node(s.param) - shift));
    const auto a = run_pipeline(cloud, unit_gc(), Tolerances{});
    const auto b = run_pipeline(rotated, unit_gc(), Tolerances{});
    REQUIRE(a.space);
    REQUIRE(b.space);
    CHECK(a.space->dist_matrix() == b.space->dist_matrix());
    CHECK(a.report.e_global == b.report.e_global);
    CHECK(a.report.gamma == b.report.gamma);
    CHECK(a.report.certificates.failed == b.report.certificates.failed);
    CHECK(a.report.certificates.tested == b.report.certificates.tested);
    CHECK(a.report.status == b.report.status);
}

TEST_CASE("reverse check: branches and applicability")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    const auto& gc = unit_gc();
    ExplicitPointSet sparse({Vec2(0, 0), Vec2(0.5, 0)});
    ReverseSpec spec;
    spec.density_samples = 500;
    auto rep = reverse_check(m, sparse, gc, spec);
    CHECK(rep.status == "NOT-APPLICABLE");
    CHECK(rep.hat_branch == "C27*eps^2");
    CHECK(rep.epsilon_hat == doctest::Approx(gc.c27 * 0.64));
    spec.epsilon = 1e9;
    rep = reverse_check(m, sparse, gc, spec);
    CHECK(rep.hat_branch == "C25");
    CHECK(rep.epsilon_hat == gc.c25);
}

TEST_CASE("reverse check: lattice helpers and model Hessian")
{
    TriangularLattice lat(0.1, 1.0);
    std::size_t inner = 0, all = 0;
    lat.outer(0.0, [&](Vec2) { ++all; });
    lat.outer(0.9, [&](Vec2 p) {
        ++inner;
        CHECK(norm(p) >= 0.9);
    });
    CHECK(std::abs(double(all) - double(lat.size_estimate())) < 0.05 * double(all));
    std::size_t ring = 0;
    lat.outer(0.0, [&](Vec2 p) { ring += norm(p) >= 0.9; });
    CHECK(ring == inner);
    std::size_t near = 0;
    lat.near(Vec2(0.3, 0.2), 0.25, [&](Vec2 p) {
        ++near;
        CHECK(norm(p - Vec2(0.3, 0.2)) <= 0.25);
    });
    std::size_t brute = 0;
    lat.outer(0.0, [&](Vec2 p) { brute += norm(p - Vec2(0.3, 0.2)) <= 0.25; });
    CHECK(near == brute);

    const auto m = ManifoldModel::euclidean_disk(1.0);
    const auto h = model_boundary_hessian(m, Vec2(0, 0.8));
    CHECK(h.depth == doctest::Approx(0.2));
    CHECK(h.lambda == doctest::Approx(1 / 0.2 - 1).epsilon(1e-5));
    const auto dm = measure_density(m, lat, 2000, 3);
    CHECK(dm.density <= 0.1);
    CHECK(dm.density >= 0.1 / std::sqrt(3.0) * 0.9);
}

TEST_CASE("lentil geometry: unit disk")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    const auto& gc = unit_gc();
    // r = s = 0.6, d = 1: delta 0.2 and the lentil is the lens of two discs.
    const double delta = 0.6 + 0.6 - 1.0;
    CHECK(delta == doctest::Approx(0.2));
    const Vec2 x(-0.5, 0), y(0.5, 0);
    const Vec2 mid = m.geodesic_point(x, y, 0.6 - 0.1);
    CHECK(m.distance(mid, x) == doctest::Approx(0.5));
    // Lens diameter: the chord through the crossing points, 2 sqrt(0.36 - 0.25).
    const double lens = 2 * std::sqrt(0.36 - 0.25);
    CHECK(lens <= delta + gc.e * std::sqrt(delta));
    CHECK(std::sqrt(delta * 0.6 - delta * delta / 4) > gc.h * std::sqrt(delta * 0.6));

    LentilGeometrySpec spec;
    spec.lentils = 60;
    spec.cover_points = 40;
    const auto rep = lentil_geometry_checks(m, gc, spec);
    CHECK(rep.lentils == 60);
    CHECK(rep.pass());
    CHECK(rep.worst_diameter_ratio < 1.0);
    CHECK(rep.worst_transversal_ratio < 1.0);
}
