#include <doctest.h>

#include <cmath>
#include <random>

#include "lentil/error.hpp"
#include "lentil/metricspace.hpp"
#include "lentil/reconstruct.hpp"
#include "lentil/scene.hpp"
#include "oracles.hpp"

using namespace lentil;

namespace {

using Mat = std::vector<std::vector<double>>;

LabeledMetricSpace space_of(const Mat& d, std::map<std::int64_t, std::size_t> labels = {})
{
    std::vector<double> flat;
    for (const auto& row : d)
        flat.insert(flat.end(), row.begin(), row.end());
    return LabeledMetricSpace(d.size(), flat, std::move(labels));
}

LabeledMetricSpace planar(const std::vector<Vec2>& p, std::map<std::int64_t, std::size_t> labels = {})
{
    Mat d(p.size(), std::vector<double>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < p.size(); ++j)
            d[i][j] = norm(p[i] - p[j]);
    return space_of(d, std::move(labels));
}

// Integer metric on n points with entries in {1, 2}: always a metric.
Mat random_12(std::size_t n, std::mt19937_64& rng)
{
    Mat d(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            d[i][j] = d[j][i] = 1.0 + static_cast<double>(rng() % 2);
    return d;
}

const GeometryConstants& unit_gc()
{
    static const GeometryConstants gc = derive(euclidean_disk_constants(1.0));
    return gc;
}

}  // namespace

TEST_CASE("metricspace: two-point spaces at distance 1 and 2")
{
    const auto x = space_of({{0, 1}, {1, 0}});
    const auto y = space_of({{0, 2}, {2, 0}});
    CHECK(lgh_exact(x, y) == doctest::Approx(0.5));
    CHECK(lgh_lower(x, y) == doctest::Approx(0.5));
    CHECK(lgh_upper(x, y) <= 0.5 + 1e-12);
    CHECK(oracle::labeled_gh_grid({{0, 1}, {1, 0}}, {{0, 2}, {2, 0}}, {}, 3) == doctest::Approx(0.5));
    const auto b = lgh_bounds(x, y);
    CHECK(b.exact);
    CHECK(b.lower == b.upper);
}

TEST_CASE("metricspace: label-pinned mismatch")
{
    // Two labels on distinct points of X, both on one point of Y.
    const Mat d = {{0, 1}, {1, 0}};
    const auto x = space_of(d, {{1, 0}, {2, 1}});
    const auto y = space_of(d, {{1, 0}, {2, 0}});
    const double v = lgh_exact(x, y);
    CHECK(v >= 0.5);
    CHECK(v == doctest::Approx(oracle::labeled_gh_grid(d, d, {{0, 0}, {1, 0}}, 3)));
    CHECK(lgh_lower(x, y) >= 0.5);
    // Without labels the spaces are isometric.
    CHECK(lgh_exact(x.without_labels(), y.without_labels()) == 0.0);
    // A pure swap is an isometry of the two-point space.
    const auto swapped = space_of(d, {{1, 1}, {2, 0}});
    CHECK(lgh_exact(x, swapped) == 0.0);
}

TEST_CASE("metricspace: identical spaces give 0")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    std::vector<Vec2> p;
    for (int i = 0; i < 40; ++i)
        p.emplace_back(u(rng), u(rng));
    std::map<std::int64_t, std::size_t> labels;
    for (int l = 0; l < 15; ++l)
        labels[l] = static_cast<std::size_t>(rng() % p.size());
    const auto x = planar(p, labels);
    CHECK(lgh_upper(x, x) == 0.0);
    CHECK(lgh_lower(x, x) == 0.0);
    const auto b = lgh_bounds(x, x);
    CHECK_FALSE(b.exact);
}

TEST_CASE("metricspace: exact value against the brute-force gluing oracle")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 40; ++trial)
    {
        const std::size_t nx = 2, ny = 2 + trial % 2;
        const auto dx = random_12(nx, rng), dy = random_12(ny, rng);
        std::vector<std::pair<int, int>> pairs;
        std::map<std::int64_t, std::size_t> lx, ly;
        const int nl = trial % 3;
        for (int l = 0; l < nl; ++l)
        {
            const int a = static_cast<int>(rng() % nx), b = static_cast<int>(rng() % ny);
            lx[l] = a, ly[l] = b;
            pairs.emplace_back(a, b);
        }
        const double exact = lgh_exact(space_of(dx, lx), space_of(dy, ly));
        const double grid = oracle::labeled_gh_grid(dx, dy, pairs, 3);
        CAPTURE(trial);
        CHECK(exact == doctest::Approx(grid).epsilon(1e-12));
    }
}

TEST_CASE("metricspace: lower <= upper and bracketing of the exact value")
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 30; ++trial)
    {
        const std::size_t nx = 3 + rng() % 4, ny = 3 + rng() % 4;
        std::vector<Vec2> a, b;
        for (std::size_t i = 0; i < nx; ++i)
            a.emplace_back(u(rng), u(rng));
        for (std::size_t i = 0; i < ny; ++i)
            b.emplace_back(u(rng), u(rng));
        std::map<std::int64_t, std::size_t> la, lb;
        for (int l = 0; l < 3; ++l)
            la[l] = rng() % nx, lb[l] = rng() % ny;
        const auto x = planar(a, la), y = planar(b, lb);
        const double ex = lgh_exact(x, y);
        CHECK(lgh_upper(x, y) >= ex - 1e-12);
        // Symmetry.
        CHECK(lgh_exact(y, x) == doctest::Approx(ex));
        // Dropping labels never increases the value.
        auto la2 = la, lb2 = lb;
        la2.erase(0), lb2.erase(0);
        CHECK(lgh_exact(planar(a, la2), planar(b, lb2)) <= ex + 1e-12);
        CHECK(lgh_exact(x.without_labels(), y.without_labels()) <= ex + 1e-12);
    }
    // Bracketing above the exact threshold.
    for (int trial = 0; trial < 10; ++trial)
    {
        std::vector<Vec2> a, b;
        for (int i = 0; i < 30; ++i)
            a.emplace_back(u(rng), u(rng));
        for (int i = 0; i < 25; ++i)
            b.emplace_back(0.8 * u(rng), u(rng));
        std::map<std::int64_t, std::size_t> la, lb;
        for (int l = 0; l < 8; ++l)
            la[l] = rng() % a.size(), lb[l] = rng() % b.size();
        const auto bd = lgh_bounds(planar(a, la), planar(b, lb));
        CHECK_FALSE(bd.exact);
        CHECK(bd.lower <= bd.upper + 1e-12);
    }
}

TEST_CASE("metricspace: triangle inequality of the exact value")
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 20; ++trial)
    {
        std::vector<LabeledMetricSpace> s;
        for (int k = 0; k < 3; ++k)
        {
            std::vector<Vec2> p;
            const std::size_t n = 2 + rng() % 4;
            for (std::size_t i = 0; i < n; ++i)
                p.emplace_back(u(rng), u(rng));
            std::map<std::int64_t, std::size_t> l;
            for (int j = 0; j < 2; ++j)
                l[j] = rng() % n;
            s.push_back(planar(p, l));
        }
        CHECK(lgh_exact(s[0], s[2]) <= lgh_exact(s[0], s[1]) + lgh_exact(s[1], s[2]) + 1e-12);
    }
}

TEST_CASE("metricspace: dense subset with close labels")
{
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 10; ++trial)
    {
        std::vector<Vec2> p;
        for (int i = 0; i < 120; ++i)
            p.emplace_back(u(rng), u(rng));
        // Y = every third point of X.
        std::vector<Vec2> q;
        std::vector<std::size_t> sub;
        for (std::size_t i = 0; i < p.size(); i += 3)
            q.push_back(p[i]), sub.push_back(i);
        double eps1 = 0;
        for (const auto& a : p)
        {
            double m = 1e9;
            for (const auto& b : q)
                m = std::min(m, norm(a - b));
            eps1 = std::max(eps1, m);
        }
        std::map<std::int64_t, std::size_t> lx, ly;
        double eps2 = 0;
        for (int l = 0; l < 20; ++l)
        {
            lx[l] = rng() % p.size();
            std::size_t best = 0;
            for (std::size_t j = 1; j < q.size(); ++j)
                if (norm(p[lx[l]] - q[j]) < norm(p[lx[l]] - q[best]))
                    best = j;
            ly[l] = best;
            eps2 = std::max(eps2, norm(p[lx[l]] - q[best]));
        }
        const auto x = planar(p, lx), y = planar(q, ly);
        const double up = lgh_upper(x, y);
        CHECK(up <= eps1 + eps2 + 1e-12);
        CHECK(lgh_lower(x, y) <= up + 1e-12);
        // The inclusion correspondence realises the bound directly.
        Correspondence r;
        for (std::size_t i = 0; i < p.size(); ++i)
        {
            std::size_t best = 0;
            for (std::size_t j = 1; j < q.size(); ++j)
                if (norm(p[i] - q[j]) < norm(p[i] - q[best]))
                    best = j;
            r.emplace_back(i, best);
        }
        for (std::size_t j = 0; j < sub.size(); ++j)
            r.emplace_back(sub[j], j);
        CHECK(correspondence_cost(x, y, r) <= eps1 + eps2 + 1e-12);
    }
}

TEST_CASE("metricspace: correspondence validation and label mismatch")
{
    const auto x = space_of({{0, 1}, {1, 0}}, {{1, 0}});
    const auto y = space_of({{0, 2}, {2, 0}}, {{2, 0}});
    CHECK_THROWS_AS(lgh_upper(x, y), Error);
    CHECK_THROWS_AS(lgh_lower(x, y), Error);
    CHECK_THROWS_AS(lgh_exact(x, y), Error);
    const auto z = space_of({{0, 2}, {2, 0}}, {{1, 1}});
    CHECK_THROWS_AS(correspondence_cost(x, z, {{0, 0}}), Error);
    CHECK(correspondence_cost(x, z, {{0, 0}, {1, 1}}) == doctest::Approx(2.0));
    CHECK(correspondence_cost(x, z, {{0, 1}, {1, 0}}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(space_of({{0, 1}, {2, 0}}), Error);
    CHECK_THROWS_AS(space_of({{0, -1}, {-1, 0}}), Error);
    std::vector<double> big(49, 1.0);
    for (int i = 0; i < 7; ++i)
        big[i * 7 + i] = 0;
    const LabeledMetricSpace seven(7, big);
    CHECK_THROWS_AS(lgh_exact(seven, seven), Error);
    CHECK(lgh_lower(seven, seven) == 0.0);
}

TEST_CASE("metricspace: JSON round trip")
{
    const auto x = space_of({{0, 1, 2}, {1, 0, 1.5}, {2, 1.5, 0}}, {{7, 2}, {-3, 0}});
    const auto j = x.to_json();
    CHECK(j["dist"].size() == 3);
    CHECK(j["dist"][2].get<double>() == 1.5);
    const auto y = LabeledMetricSpace::from_json(j);
    CHECK(y.size() == 3);
    CHECK(y.dist(2, 1) == 1.5);
    CHECK(y.labels() == x.labels());
    CHECK(lgh_exact(x, y) == 0.0);
    CHECK(x.metric_defect() == 0.0);
    CHECK(space_of({{0, 1, 3}, {1, 0, 1}, {3, 1, 0}}).metric_defect() == doctest::Approx(1.0));
    auto bad = j;
    bad["dist"].push_back(1.0);
    CHECK_THROWS_AS(LabeledMetricSpace::from_json(bad), Error);
    CHECK_THROWS_AS(LabeledMetricSpace::from_json(nlohmann::json::parse(R"({"n": 2})")), Error);
}

TEST_CASE("metricspace: sampled comparison against the disk")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    const auto grid = m.grid(256);

    // The snapshot against itself.
    std::vector<Vec2> interior = {{0.1, 0.2}, {-0.3, 0.5}, {0.0, -0.6}};
    const auto snap = model_snapshot(m, interior, grid);
    CHECK(snap.size() == 3 + 256);
    CHECK(snap.labels().size() == 256);
    CHECK(lgh_upper(snap, snap) == 0.0);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<SpacetimeSource> src;
    for (int i = 0; i < 20; ++i)
    {
        const double r = 0.95 * std::sqrt(u(rng)), t = two_pi * u(rng);
        src.push_back({unit_from_angle(t) * r, 2 * u(rng), i});
    }
    ForwardSpec fs;
    fs.grid_size = 256;
    const auto cloud = forward(m, src, fs);
    const auto res = run_pipeline(cloud, unit_gc(), Tolerances{});
    REQUIRE(res.space);
    REQUIRE(!res.report.alpha.empty());
    const auto s1 = sampled_lgh_vs_manifold(*res.space, res.report.alpha, m, 150, 1);
    const auto s2 = sampled_lgh_vs_manifold(*res.space, res.report.alpha, m, 600, 2);
    CHECK(s1.bounds.lower <= s1.bounds.upper + 1e-12);
    CHECK(s1.sampling_slack > 0);
    CHECK(s1.grid_slack == doctest::Approx(two_pi / 256));
    CHECK(s2.sampling_slack < s1.sampling_slack);
    if (res.report.lgh.is_finite())
        CHECK(s2.bounds.lower <= res.report.lgh.value() + s2.sampling_slack + s2.grid_slack);
    // Refining the sample moves the upper bound by no more than the density change.
    CHECK(std::abs(s2.bounds.upper - s1.bounds.upper) <= s1.sampling_slack + s2.sampling_slack + 1e-9);
    const auto j = s1.to_json();
    CHECK(j.contains("sampling_slack"));
    CHECK(j.at("exact") == false);
}
