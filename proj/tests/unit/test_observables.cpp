#include <doctest.h>

#include <cmath>
#include <random>

#include "lentil/error.hpp"
#include "lentil/observables.hpp"
#include "oracles.hpp"

using namespace lentil;

namespace {

std::vector<double> arrival(const ManifoldModel& m, const BoundaryGrid& g, Vec2 p, double tau)
{
    auto v = m.boundary_distance_function(p, g);
    for (auto& x : v)
        x += tau;
    return v;
}

double wrap_angle_diff(double a, double b)
{
    return std::abs(std::remainder(a - b, two_pi));
}

}  // namespace

TEST_CASE("observables: collinear pair on the unit disk")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    const auto g = m.grid(1024);
    const double tol = obs_tol(g, Tolerances{});
    const auto ar = arrival(m, g, Vec2(0.5, 0), 2.0);
    const auto as = arrival(m, g, Vec2(-0.5, 0), 5.0);
    auto p = observe_pair(ar, as, g, tol);
    // y lies beyond s as seen from r: angle pi.
    CHECK(wrap_angle_diff(g.param(p.endpoints.y), pi) < 1e-9);
    CHECK(wrap_angle_diff(g.param(p.endpoints.x), 0.0) < 1e-9);
    // f_rr(x,y) = a_r(0) - a_r(pi) = 0.5 - 1.5 = -1 and f_ss = +1.
    CHECK(p.distance == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p.time_diff == doctest::Approx(-3.0).epsilon(1e-9));
    CHECK(p.spread < 1e-12);

    EndpointPair e = p.endpoints;
    const auto f = distance_difference_function(ar, as, e, g, tol);
    CHECK(f[0] == doctest::Approx(-1.0).epsilon(1e-9));  // z = x: d(p_r,x) - d(p_s,x) = 0.5 - 1.5
    CHECK(f[512] == doctest::Approx(1.0).epsilon(1e-9));

    CHECK_THROWS_AS(conjoined_endpoints(ar, ar, g, tol), Error);
    auto shifted = ar;
    for (auto& v : shifted)
        v += 4.0;
    CHECK_THROWS_AS(conjoined_endpoints(ar, shifted, g, tol), Error);
}

TEST_CASE("observables: oblique pair against the chord oracle")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    const auto g = m.grid(1024);
    const double tol = obs_tol(g, Tolerances{});
    const Vec2 pr(0.5, 0), ps(0, 0.5);
    const auto ar = arrival(m, g, pr, 0.0), as = arrival(m, g, ps, 0.0);
    const auto p = observe_pair(ar, as, g, tol);
    CHECK(p.distance == doctest::Approx(std::sqrt(0.5)).epsilon(1e-6));
    // Dense scan of D on a fine circle locates the endpoints independently.
    double best_max = -1e9, arg_max = 0, best_min = 1e9, arg_min = 0;
    for (int i = 0; i < 2000000; ++i)
    {
        const double t = two_pi * i / 2000000;
        const Vec2 z = unit_from_angle(t);
        const double d = norm(z - pr) - norm(z - ps);
        if (d > best_max)
            best_max = d, arg_max = t;
        if (d < best_min)
            best_min = d, arg_min = t;
    }
    CHECK(wrap_angle_diff(g.param(p.endpoints.y), arg_max) < 2 * g.spacing());
    CHECK(wrap_angle_diff(g.param(p.endpoints.x), arg_min) < 2 * g.spacing());
    // Both endpoints are on the line x + y = 0.5.
    for (auto e : {p.endpoints.x, p.endpoints.y})
    {
        const Vec2 z = unit_from_angle(g.param(e));
        CHECK(z.x + z.y == doctest::Approx(0.5).epsilon(2 * g.spacing()));
    }
    CHECK(p.endpoints.condition > 0);
}

TEST_CASE("observables: random pairs, cocycle, claim v, hyperbolic disk")
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.6, 0.6), t(0, 3);
    for (const auto& m : {ManifoldModel::euclidean_disk(1.0), ManifoldModel::curved_disk(-1.0, 0.7)})
    {
        const auto g = m.grid(1024);
        const double tol = obs_tol(g, Tolerances{});
        const double R = m.radius();
        std::vector<Vec2> pts;
        std::vector<double> taus;
        std::vector<ArrivalFunction> fs;
        for (int i = 0; i < 6; ++i)
        {
            pts.push_back(Vec2(u(rng), u(rng)) * R);
            taus.push_back(t(rng));
            fs.push_back({arrival(m, g, pts.back(), taus.back()), i});
        }
        CloudHeader h;
        h.grid_size = g.size();
        h.boundary_length = g.length();
        const auto sp = DiscreteSpace::assemble(fs, h, Tolerances{});
        for (std::size_t r = 0; r < 6; ++r)
            for (std::size_t s = 0; s < 6; ++s)
            {
                const double truth = m.kind() == ModelKind::euclidean_disk
                                         ? norm(pts[r] - pts[s])
                                         : oracle::hyperbolic_distance(pts[r], pts[s], 1.0);
                CHECK(std::abs(sp.dist(r, s) - truth) <= 2 * g.spacing() + 3 * m.tol_dist());
                CHECK(std::abs(sp.time_diff(r, s) - (taus[r] - taus[s])) <= tol);
            }
        const auto f01 = sp.dd_function(0, 1), f12 = sp.dd_function(1, 2), f02 = sp.dd_function(0, 2);
        const auto f10 = sp.dd_function(1, 0);
        const auto nodes = m.boundary_nodes(g);
        for (std::size_t k = 0; k < f01.size(); k += 7)
        {
            CHECK(std::abs(f01[k] + f12[k] - f02[k]) <= 3 * tol);
            CHECK(std::abs(f01[k] + f10[k]) <= tol);
            const double truth = m.distance(pts[0], nodes[k]) - m.distance(pts[1], nodes[k]);
            CHECK(std::abs(f01[k] - truth) <= tol);
            // Claim v: a_s(x) - a_s(y) is the difference of boundary distances.
            const double lhs = fs[2].values[k] - fs[2].values[0];
            CHECK(std::abs(lhs - (m.distance(pts[2], nodes[k]) - m.distance(pts[2], nodes[0]))) <= tol);
        }
        const auto back = DiscreteSpace::from_json(nlohmann::json::parse(sp.to_json().dump()));
        CHECK(back.dist_matrix() == sp.dist_matrix());
        CHECK(back.endpoints(3, 1).x.node == sp.endpoints(3, 1).x.node);
    }
}

TEST_CASE("observables: trivial spaces and rotation equivariance")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    const auto g = m.grid(512);
    CloudHeader h;
    h.grid_size = g.size();
    h.boundary_length = g.length();
    const auto one = DiscreteSpace::assemble({{arrival(m, g, Vec2(0.1, 0.2), 0.0), 0}}, h, Tolerances{});
    CHECK(one.size() == 1);
    CHECK(one.dist(0, 0) == 0.0);

    std::vector<ArrivalFunction> fs = {{arrival(m, g, Vec2(0.1, 0.2), 0.0), 0},
                                       {arrival(m, g, Vec2(-0.4, 0.3), 1.0), 1},
                                       {arrival(m, g, Vec2(0.2, -0.5), 0.5), 2}};
    auto rotated = fs;
    const std::size_t shift = 77;
    for (auto& f : rotated)
        std::rotate(f.values.begin(), f.values.begin() + static_cast<std::ptrdiff_t>(shift), f.values.end());
    const auto a = DiscreteSpace::assemble(fs, h, Tolerances{});
    const auto b = DiscreteSpace::assemble(rotated, h, Tolerances{});
    CHECK(a.dist_matrix() == b.dist_matrix());
    CHECK(a.time_diff_matrix() == b.time_diff_matrix());
    const auto ea = a.endpoints(0, 2), eb = b.endpoints(0, 2);
    CHECK(g.wrap(eb.y.node + static_cast<std::int64_t>(shift)) == ea.y.node);
    CHECK(eb.y.frac == ea.y.frac);

    // Merged sources abort assembly naming the pair.
    fs.push_back({fs[1].values, 3});
    for (auto& v : fs[3].values)
        v += 2.0;
    try
    {
        DiscreteSpace::assemble(fs, h, Tolerances{});
        FAIL("expected failure");
    }
    catch (const Error& e)
    {
        CHECK(std::string(e.what()).find("pair (1, 3)") != std::string::npos);
    }
}
