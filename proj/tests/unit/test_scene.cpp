#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "lentil/error.hpp"
#include "lentil/scene.hpp"

using namespace lentil;

namespace {

std::vector<std::pair<double, double>> sorted_pairs(const ArrivalCloud& c)
{
    std::vector<std::pair<double, double>> v;
    for (const auto& s : c.samples)
        v.emplace_back(s.param, s.time);
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

TEST_CASE("forward: symmetric and chord-extreme examples")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    ForwardSpec fs;
    fs.grid_size = 256;
    auto c = forward(m, {{Vec2(0, 0), 0.0, 7}}, fs);
    REQUIRE(c.samples.size() == 256);
    for (const auto& s : c.samples)
        CHECK(s.time == doctest::Approx(1.0).epsilon(1e-12));

    c = forward(m, {{Vec2(0.5, 0), 0.0, 0}}, fs);
    double lo = 1e9, hi = -1e9;
    for (const auto& s : c.samples)
    {
        lo = std::min(lo, s.time);
        hi = std::max(hi, s.time);
    }
    CHECK(lo == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(hi == doctest::Approx(1.5).epsilon(1e-12));

    // Same position, times differing by 2: parallel graphs.
    c = forward(m, {{Vec2(0.2, 0.1), 0.0, 0}, {Vec2(0.2, 0.1), 2.0, 1}}, fs);
    auto v = sorted_pairs(c);
    for (std::size_t i = 0; i < v.size(); i += 2)
    {
        CHECK(v[i].first == v[i + 1].first);
        CHECK(v[i + 1].second - v[i].second == doctest::Approx(2.0).epsilon(1e-12));
    }
}

TEST_CASE("forward: every sample is reproduced by some source, windowing is filtering")
{
    const auto m = ManifoldModel::curved_disk(-1.0, 0.6);
    PoissonSpec ps;
    ps.intensity = 3.0;
    ps.t_max = 2.0;
    const auto src = poisson_sources(m, ps, 11);
    REQUIRE(!src.empty());
    ForwardSpec fs;
    fs.grid_size = 128;
    fs.seed = 5;
    const auto full = forward(m, src, fs);
    const auto grid = m.grid(fs.grid_size);
    for (const auto& s : full.samples)
    {
        double best = 1e9;
        for (const auto& p : src)
            best = std::min(best, std::abs(s.time - p.time - m.distance(m.boundary_point(s.param), p.position)));
        CHECK(best <= m.tol_dist());
    }
    fs.t_max = 1.5;
    const auto cut = forward(m, src, fs);
    std::vector<std::pair<double, double>> filtered;
    for (const auto& p : sorted_pairs(full))
        if (p.second <= 1.5)
            filtered.push_back(p);
    CHECK(sorted_pairs(cut) == filtered);
    CHECK(grid.size() == 128);

    ForwardSpec bad;
    CHECK_THROWS_AS(forward(m, {{Vec2(0.6, 0), 0.0, 0}}, bad), Error);
    CHECK_THROWS_AS(forward(m, {{Vec2(0.1, 0), 0.0, 0}, {Vec2(0.1, 0), 0.0, 1}}, bad), Error);
}

TEST_CASE("poisson: mean count, T = 0, half-disk symmetry, margin")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    CHECK(riemannian_volume(m) == doctest::Approx(pi).epsilon(1e-10));
    // Hyperbolic area of a Poincare disk of Euclidean radius a: 4 pi a^2 / (1 - a^2).
    CHECK(riemannian_volume(ManifoldModel::curved_disk(-1.0, 0.5)) ==
          doctest::Approx(4 * pi * 0.25 / 0.75).epsilon(1e-8));

    PoissonSpec ps;
    ps.intensity = 10.0 / pi;
    ps.t_max = 1.0;
    double total = 0;
    long left = 0, right = 0;
    const int seeds = 10000;
    for (int s = 0; s < seeds; ++s)
    {
        const auto src = poisson_sources(m, ps, static_cast<std::uint64_t>(s));
        total += static_cast<double>(src.size());
        for (const auto& p : src)
        {
            (p.position.x < 0 ? left : right) += 1;
            CHECK_MESSAGE(m.distance_to_boundary(p.position) >= 1e-3 * 2.0, "margin violated");
        }
    }
    const double mean = total / seeds;
    CHECK(mean >= 9.8);
    CHECK(mean <= 10.2);
    // Binomial split of about 1e5 points: 4 sigma is about 630.
    CHECK(std::abs(left - right) < 4 * std::sqrt(static_cast<double>(left + right)));

    const nlohmann::json zero = {{"poisson", {{"intensity", 5.0}, {"T", 0.0}}}};
    CHECK(sources_from_json(m, zero, 1).empty());

    // Reproducible.
    const auto a = poisson_sources(m, ps, 42), b = poisson_sources(m, ps, 42);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK(a[i].position == b[i].position);

    ps.density = SourceDensity::expression("x");
    CHECK_THROWS_AS(poisson_sources(m, ps, 1), Error);
    ps.density = SourceDensity::expression("1 + x");  // vanishes at x = -1
    CHECK_THROWS_AS(poisson_sources(m, ps, 1), Error);
    ps.density = SourceDensity::expression("2 + x");
    CHECK_NOTHROW(poisson_sources(m, ps, 1));
}

TEST_CASE("cloud and sidecar files round trip")
{
    const auto dir = std::filesystem::temp_directory_path() / "lentil_scene_test";
    std::filesystem::create_directories(dir);
    const auto m = ManifoldModel::euclidean_disk(1.0);
    std::vector<SpacetimeSource> src = {{Vec2(0.1, 0.2), 0.5, 3}, {Vec2(-0.3, 0.1), 1.25, 9}};
    ForwardSpec fs;
    fs.grid_size = 64;
    fs.t_max = 2.0;
    const auto c = forward(m, src, fs);
    const std::string path = (dir / "cloud.csv").string();
    write_cloud(path, c);
    CHECK(cloud_header_path(path) == (dir / "cloud.json").string());
    const auto back = read_cloud(path);
    CHECK(back.header.grid_size == 64);
    CHECK(back.header.t_max == 2.0);
    CHECK(back.header.manifold_hash == m.hash_hex());
    REQUIRE(back.samples.size() == c.samples.size());
    for (std::size_t i = 0; i < c.samples.size(); ++i)
    {
        CHECK(back.samples[i].param == c.samples[i].param);
        CHECK(back.samples[i].time == c.samples[i].time);
    }
    write_truth((dir / "truth.csv").string(), src);
    const auto t = read_truth((dir / "truth.csv").string());
    REQUIRE(t.size() == 2);
    CHECK(t[1].id == 9);
    CHECK(t[1].position == src[1].position);

    {
        auto out = std::ofstream(dir / "bad.csv");
        out << "boundary_param,time\n0.1,abc\n";
    }
    {
        auto out = std::ofstream(dir / "bad.json");
        out << c.header.to_json().dump();
    }
    try
    {
        read_cloud((dir / "bad.csv").string());
        FAIL("expected a parse error");
    }
    catch (const Error& e)
    {
        CHECK(e.code() == ErrorCode::parse);
        CHECK(std::string(e.what()).find("bad.csv:2") != std::string::npos);
        CHECK(std::string(e.what()).find("time") != std::string::npos);
    }
    std::filesystem::remove_all(dir);
}
