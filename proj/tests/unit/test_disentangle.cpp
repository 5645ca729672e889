#include <doctest.h>

#include <cmath>
#include <random>

#include "lentil/disentangle.hpp"
#include "lentil/error.hpp"

using namespace lentil;

namespace {

std::vector<std::vector<double>> truth_functions(const ManifoldModel& m, const std::vector<SpacetimeSource>& src,
                                                 std::int64_t n)
{
    std::vector<std::vector<double>> out;
    const auto grid = m.grid(n);
    for (const auto& s : src)
    {
        auto r = m.boundary_distance_function(s.position, grid);
        for (auto& v : r)
            v += s.time;
        out.push_back(r);
    }
    return out;
}

std::vector<SpacetimeSource> random_sources(int count, std::uint64_t seed, double tmax)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1, 1), t(0, tmax);
    std::vector<SpacetimeSource> s;
    while (static_cast<int>(s.size()) < count)
    {
        Vec2 p(0.9 * u(rng), 0.9 * u(rng));
        if (norm(p) < 0.9)
            s.push_back({p, t(rng), static_cast<std::int64_t>(s.size())});
    }
    return s;
}

}  // namespace

TEST_CASE("separate: single source reproduces r_p + tau")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    ForwardSpec fs;
    fs.grid_size = 512;
    const std::vector<SpacetimeSource> src = {{Vec2(0.3, -0.2), 0.7, 0}};
    const auto r = separate(forward(m, src, fs), Tolerances{});
    REQUIRE(r.functions.size() == 1);
    CHECK(r.partials.empty());
    CHECK(!r.ambiguous());
    const auto t = truth_functions(m, src, 512)[0];
    for (std::size_t k = 0; k < t.size(); ++k)
        CHECK(r.functions[0].values[k] == doctest::Approx(t[k]).epsilon(1e-14));
}

TEST_CASE("separate: crossing and disjoint pairs")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    ForwardSpec fs;
    fs.grid_size = 1024;
    std::vector<SpacetimeSource> src = {{Vec2(0.5, 0), 0.0, 0}, {Vec2(-0.5, 0), 0.0, 1}};
    auto r = separate(forward(m, src, fs), Tolerances{});
    REQUIRE(r.functions.size() == 2);
    auto acc = association_accuracy(r, truth_functions(m, src, 1024), 1e-12);
    CHECK(acc.accuracy == 1.0);
    CHECK(!r.ambiguous());

    src = {{Vec2(0.1, 0), 0.0, 0}, {Vec2(-0.2, 0.3), 5.0, 1}};
    r = separate(forward(m, src, fs), Tolerances{});
    acc = association_accuracy(r, truth_functions(m, src, 1024), 1e-12);
    CHECK(acc.accuracy == 1.0);
}

TEST_CASE("separate: random 20-source scenes, permutation invariance")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    for (std::uint64_t seed = 1; seed <= 3; ++seed)
    {
        const auto src = random_sources(20, seed, 1.0);
        ForwardSpec fs;
        fs.grid_size = 1024;
        fs.seed = seed;
        const auto r = separate(forward(m, src, fs), Tolerances{});
        const auto truth = truth_functions(m, src, 1024);
        const auto acc = association_accuracy(r, truth, 1e-12);
        CHECK(acc.accuracy == 1.0);
        CHECK(r.functions.size() == 20);
        fs.seed = seed + 100;
        const auto r2 = separate(forward(m, src, fs), Tolerances{});
        REQUIRE(r2.functions.size() == r.functions.size());
        for (std::size_t i = 0; i < r.functions.size(); ++i)
            CHECK(r2.functions[i].values == r.functions[i].values);
        // Lipschitz in arclength.
        const double h = m.grid(1024).spacing();
        for (const auto& f : r.functions)
            for (std::size_t k = 0; k + 1 < f.values.size(); ++k)
                CHECK(std::abs(f.values[k + 1] - f.values[k]) <= h * (1 + 1e-9));
    }
}

TEST_CASE("separate: window cuts graphs into partials")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    ForwardSpec fs;
    fs.grid_size = 512;
    fs.t_max = 1.0;
    // Graph of the first lies in [0.5, 1.5]: cut. The second is complete.
    const std::vector<SpacetimeSource> src = {{Vec2(0.5, 0), 0.0, 0}, {Vec2(0.0, 0.1), -0.2, 1}};
    const auto r = separate(forward(m, src, fs), Tolerances{});
    CHECK(r.functions.size() == 1);
    REQUIRE(r.partials.size() == 1);
    // The cut graph is one arc around node 0 (times below 1 near angle 0).
    const auto& p = r.partials[0];
    CHECK(p.values.size() > 100);
    for (double v : p.values)
        CHECK(v <= 1.0);
}

TEST_CASE("separate: indistinguishable branches are flagged")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    ForwardSpec fs;
    fs.grid_size = 512;
    const std::vector<SpacetimeSource> src = {{Vec2(0.2, 0.1), 0.0, 0}, {Vec2(0.2, 0.1), 1e-13, 1}};
    const auto r = separate(forward(m, src, fs), Tolerances{});
    CHECK(r.ambiguous());
    CHECK(r.alternative.has_value());
}

TEST_CASE("separate: off-grid params are rejected, empty cloud is empty")
{
    ArrivalCloud c;
    c.header.grid_size = 16;
    c.header.boundary_length = 16.0;
    CHECK(separate(c, Tolerances{}).functions.empty());
    c.samples.push_back({0.5, 1.0});
    CHECK_THROWS_AS(separate(c, Tolerances{}), Error);
}

TEST_CASE("oracle mode groups by labels")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    ForwardSpec fs;
    fs.grid_size = 64;
    const std::vector<SpacetimeSource> src = {{Vec2(0.5, 0), 0.0, 0}, {Vec2(-0.5, 0), 0.0, 1}};
    const auto cloud = forward(m, {src[0]}, fs);
    auto both = cloud;
    const auto c2 = forward(m, {src[1]}, fs);
    both.samples.insert(both.samples.end(), c2.samples.begin(), c2.samples.end());
    std::vector<std::int64_t> labels(both.samples.size(), 0);
    std::fill(labels.begin() + static_cast<std::ptrdiff_t>(cloud.samples.size()), labels.end(), 1);
    const auto r = separate_with_labels(both, labels);
    REQUIRE(r.functions.size() == 2);
    CHECK(association_accuracy(r, truth_functions(m, src, 64), 1e-12).accuracy == 1.0);
}

TEST_CASE("dedupe_spatial")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    const auto grid = m.grid(256);
    auto mk = [&](Vec2 p, double tau) {
        ArrivalFunction f;
        f.values = m.boundary_distance_function(p, grid);
        for (auto& v : f.values)
            v += tau;
        return f;
    };
    const double tol = 100 * 1e-7 * 2.0;
    auto d = dedupe_spatial({mk(Vec2(0.1, 0.1), 0.0), mk(Vec2(0.1, 0.1), 3.0)}, tol);
    CHECK(d.representatives.size() == 1);
    CHECK(d.representative_of[1] == 0);
    CHECK(d.offset[1] == doctest::Approx(3.0).epsilon(1e-12));

    const auto f1 = mk(Vec2(0.1, 0.1), 0.0), f2 = mk(Vec2(0.2, 0.1), 0.0);
    double lo = 1e9, hi = -1e9;
    for (std::size_t k = 0; k < f1.values.size(); ++k)
    {
        lo = std::min(lo, f1.values[k] - f2.values[k]);
        hi = std::max(hi, f1.values[k] - f2.values[k]);
    }
    CHECK(hi - lo > 0.1);  // oscillation oracle: twice the separation along the axis
    d = dedupe_spatial({f1, f2}, tol);
    CHECK(d.representatives.size() == 2);
    CHECK(dedupe_spatial({}, tol).representatives.empty());
}

TEST_CASE("separation JSON round trip")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    ForwardSpec fs;
    fs.grid_size = 64;
    const auto r = separate(forward(m, {{Vec2(0.1, 0.2), 0.3, 0}}, fs), Tolerances{});
    const auto back = separation_from_json(nlohmann::json::parse(to_json(r).dump()));
    REQUIRE(back.functions.size() == 1);
    CHECK(back.functions[0].values == r.functions[0].values);
    CHECK(back.header.grid_size == 64);
    CHECK_THROWS_AS(separation_from_json(nlohmann::json::parse("{\"functions\":[]}")), Error);
}
