#include <doctest.h>

#include <cmath>
#include <random>

#include "lentil/boundary.hpp"
#include "lentil/constants.hpp"
#include "lentil/error.hpp"
#include "lentil/geometry.hpp"
#include "oracles.hpp"

using namespace lentil;

namespace {

Vec2 random_point(std::mt19937_64& rng, double radius)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = radius * std::sqrt(u(rng));
    return unit_from_angle(two_pi * u(rng)) * r;
}

}  // namespace

TEST_CASE("field: jets of expressions match finite differences")
{
    auto c = make_expression_speed("1 + 0.2*x + 0.1*y^2 - 0.05*sin(x*y) + exp(-r2)/4");
    const Vec2 p(0.3, -0.2);
    const double h = 1e-4;
    auto v = [&](double x, double y) { return c->eval(Vec2(x, y)).v; };
    const Jet2 j = c->eval(p);
    CHECK(j.dx == doctest::Approx((v(p.x + h, p.y) - v(p.x - h, p.y)) / (2 * h)).epsilon(1e-7));
    CHECK(j.dy == doctest::Approx((v(p.x, p.y + h) - v(p.x, p.y - h)) / (2 * h)).epsilon(1e-7));
    CHECK(j.dxx == doctest::Approx((v(p.x + h, p.y) - 2 * v(p.x, p.y) + v(p.x - h, p.y)) / (h * h)).epsilon(1e-4));
    CHECK(j.dyy == doctest::Approx((v(p.x, p.y + h) - 2 * v(p.x, p.y) + v(p.x, p.y - h)) / (h * h)).epsilon(1e-4));
    const double dxy = (v(p.x + h, p.y + h) - v(p.x + h, p.y - h) - v(p.x - h, p.y + h) + v(p.x - h, p.y - h)) /
                       (4 * h * h);
    CHECK(j.dxy == doctest::Approx(dxy).epsilon(1e-4));
    CHECK_FALSE(c->is_radial());
    CHECK(make_expression_speed("(1 - r2)/2")->is_radial());
}

TEST_CASE("field: malformed expressions are parse errors")
{
    CHECK_THROWS_AS(make_expression_speed("1 + "), Error);
    CHECK_THROWS_AS(make_expression_speed("foo(x)"), Error);
    CHECK_THROWS_AS(make_expression_speed("(x"), Error);
}

TEST_CASE("field: grid speed interpolates smooth data")
{
    const int n = 41;
    const double ext = 1.2;
    std::vector<double> vals(n * n);
    auto f = [](double x, double y) { return 1.0 + 0.3 * x * x - 0.2 * x * y + 0.1 * y; };
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
            vals[j * n + i] = f(-ext + 2 * ext * i / (n - 1), -ext + 2 * ext * j / (n - 1));
    auto c = make_grid_speed(n, ext, vals);
    const Jet2 j = c->eval(Vec2(0.31, -0.17));
    CHECK(j.v == doctest::Approx(f(0.31, -0.17)).epsilon(1e-6));
    CHECK(j.dx == doctest::Approx(0.6 * 0.31 + 0.2 * 0.17).epsilon(1e-3));
}

TEST_CASE("distance: Euclidean examples")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    CHECK(m.distance({0.3, 0}, {-0.4, 0}) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(m.distance({0.1, 0.2}, {0.1, 0.2}) == 0.0);
    CHECK(m.boundary_length() == doctest::Approx(two_pi));
    CHECK(m.diameter() == doctest::Approx(2.0));
}

TEST_CASE("distance: hyperbolic closed form against the hyperboloid oracle")
{
    const auto m = ManifoldModel::curved_disk(-1.0, 0.9);
    CHECK(m.distance({0, 0}, {0.5, 0}) == doctest::Approx(2 * std::atanh(0.5)).epsilon(1e-14));
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i)
    {
        const Vec2 p = random_point(rng, 0.9), q = random_point(rng, 0.9);
        CHECK(m.distance(p, q) == doctest::Approx(oracle::hyperbolic_distance(p, q, 1.0)).epsilon(1e-9));
    }
    const auto m2 = ManifoldModel::curved_disk(-4.0, 0.3);
    const Vec2 p(0.1, 0.2), q(-0.25, 0.05);
    CHECK(m2.distance(p, q) == doctest::Approx(oracle::hyperbolic_distance(p, q, 2.0)).epsilon(1e-12));
}

TEST_CASE("distance: spherical cap against the sphere oracle")
{
    const auto m = ManifoldModel::curved_disk(0.5, 1.0);
    std::mt19937_64 rng(4);
    for (int i = 0; i < 100; ++i)
    {
        const Vec2 p = random_point(rng, 1.0), q = random_point(rng, 1.0);
        CHECK(m.distance(p, q) == doctest::Approx(oracle::spherical_distance(p, q, std::sqrt(0.5))).epsilon(1e-10));
    }
}

TEST_CASE("distance: shooting solver agrees with the oracles")
{
    const auto hyp = ManifoldModel::curved_disk(-1.0, 0.5).with_shooting();
    const auto euc = ManifoldModel::conformal_disk(make_expression_speed("1"), 1.0);
    const auto hyp_expr = ManifoldModel::conformal_disk(make_expression_speed("(1 - r2)/2"), 0.5);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 12; ++i)
    {
        const Vec2 p = random_point(rng, 0.5), q = random_point(rng, 0.5);
        const double d = oracle::hyperbolic_distance(p, q, 1.0);
        CHECK(hyp.distance(p, q) == doctest::Approx(d).epsilon(1e-8));
        CHECK(hyp_expr.distance(p, q) == doctest::Approx(d).epsilon(1e-8));
        const Vec2 a = random_point(rng, 1.0), b = random_point(rng, 1.0);
        CHECK(euc.distance(a, b) == doctest::Approx(norm(a - b)).epsilon(1e-8));
    }
    // Interior to boundary and boundary to boundary.
    const Vec2 b1 = hyp.boundary_point(0.3), b2 = hyp.boundary_point(4.0);
    const Vec2 p(0.1, -0.2);
    CHECK(hyp.distance(p, b1) == doctest::Approx(oracle::hyperbolic_distance(p, b1, 1.0)).epsilon(1e-8));
    CHECK(hyp.distance(b1, p) == doctest::Approx(oracle::hyperbolic_distance(p, b1, 1.0)).epsilon(1e-8));
    CHECK(hyp.distance(b1, b2) == doctest::Approx(oracle::hyperbolic_distance(b1, b2, 1.0)).epsilon(1e-8));
}

TEST_CASE("log and exp: examples and round trips")
{
    const auto euc = ManifoldModel::euclidean_disk(1.0);
    const Vec2 v = euc.log_map({0, 0}, {0.5, 0});
    CHECK(v.x == doctest::Approx(0.5));
    CHECK(v.y == doctest::Approx(0.0));

    const auto hyp = ManifoldModel::curved_disk(-1.0, 0.9);
    const Vec2 w = hyp.log_map({0, 0}, {0.5, 0});
    CHECK(w.x == doctest::Approx(2 * std::atanh(0.5)).epsilon(1e-14));
    CHECK(std::abs(w.y) < 1e-15);

    std::mt19937_64 rng(6);
    for (const auto& m : {hyp, ManifoldModel::curved_disk(0.5, 1.0), euc})
    {
        const double diam = m.diameter();
        for (int i = 0; i < 100; ++i)
        {
            const Vec2 x = random_point(rng, 0.8 * m.radius()), y = random_point(rng, m.radius());
            const Vec2 lv = m.log_map(x, y);
            CHECK(norm(lv) == doctest::Approx(m.distance(x, y)).epsilon(1e-12));
            const auto back = m.exp_map(x, lv);
            REQUIRE(back.has_value());
            CHECK(norm(*back - y) <= 1e-8 * diam);
            const Vec2 v2 = lv * 0.5;
            const auto y2 = m.exp_map(x, v2);
            REQUIRE(y2.has_value());
            CHECK(norm(m.log_map(x, *y2) - v2) <= 1e-8 * diam);
        }
    }
    // The shooting implementation of exp/log matches the closed form.
    const auto hs = ManifoldModel::curved_disk(-1.0, 0.5).with_shooting();
    const auto hc = ManifoldModel::curved_disk(-1.0, 0.5);
    for (int i = 0; i < 6; ++i)
    {
        const Vec2 x = random_point(rng, 0.4), y = random_point(rng, 0.45);
        CHECK(norm(hs.log_map(x, y) - hc.log_map(x, y)) < 1e-7);
        const Vec2 v3 = hc.log_map(x, y) * 0.7;
        CHECK(norm(*hs.exp_map(x, v3) - *hc.exp_map(x, v3)) < 1e-9);
    }
}

TEST_CASE("metric axioms on random triples")
{
    const auto hyp = ManifoldModel::curved_disk(-1.0, 0.9);
    const auto euc = ManifoldModel::euclidean_disk(1.0);
    std::mt19937_64 rng(7);
    for (const auto& m : {hyp, euc})
    {
        const double tol = m.tol_dist();
        for (int i = 0; i < 1000; ++i)
        {
            const Vec2 x = random_point(rng, m.radius()), y = random_point(rng, m.radius()),
                       z = random_point(rng, m.radius());
            CHECK(m.distance(x, z) <= m.distance(x, y) + m.distance(y, z) + 3 * tol);
            CHECK(std::abs(m.distance(x, y) - m.distance(y, x)) <= 2 * tol);
        }
    }
}

TEST_CASE("boundary distance function examples")
{
    const auto euc = ManifoldModel::euclidean_disk(1.0);
    const auto grid = euc.grid(1024);
    for (double v : euc.boundary_distance_function({0, 0}, grid))
        CHECK(v == doctest::Approx(1.0).epsilon(1e-15));
    const auto f = euc.boundary_distance_function({0.9, 0}, grid);
    const auto it = std::min_element(f.begin(), f.end());
    CHECK(*it == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(it - f.begin() == 0);

    const auto hyp = ManifoldModel::curved_disk(-1.0, 0.5);
    const double rho = oracle::hyperbolic_distance({0, 0}, {0.5, 0}, 1.0);
    for (double v : hyp.boundary_distance_function({0, 0}, hyp.grid(256)))
        CHECK(v == doctest::Approx(rho).epsilon(1e-13));
}

TEST_CASE("boundary hessian examples")
{
    const auto euc = ManifoldModel::euclidean_disk(1.0);
    const auto grid = euc.grid(4096);
    std::vector<double> constant(4096, 2.5);
    CHECK(boundary_hessian(constant, grid, {17, 0.0}, 2, false).value == doctest::Approx(0.0));

    // r_p for p = (0.9, 0): the oracle is the symbolic second derivative,
    // a/(1-a) = 9 at the nearest point.
    const auto f = euc.boundary_distance_function({0.9, 0}, grid);
    const auto h = boundary_hessian(f, grid, {0, 0.0}, 2, false);
    const double exact = oracle::euclidean_rp_second_derivative(0.9, 0.0);
    CHECK(exact == doctest::Approx(9.0));
    CHECK(std::abs(h.value - exact) < 1e-2);
    CHECK(std::abs(h.value - exact) <= 5 * h.error + 1e-9);
    const auto hr = boundary_hessian(f, grid, {0, 0.0}, 2, true);
    CHECK(std::abs(hr.value - exact) < std::abs(h.value - exact));

    std::vector<double> cosine(4096);
    for (int i = 0; i < 4096; ++i)
        cosine[i] = std::cos(grid.param(i));
    for (std::int64_t node : {0, 500, 1900})
    {
        const auto hc = boundary_hessian(cosine, grid, {node, 0.25}, 2, false);
        CHECK(hc.value == doctest::Approx(-std::cos(grid.param(GridParam{node, 0.25}))).epsilon(1e-4));
    }
}

TEST_CASE("critical points")
{
    const auto euc = ManifoldModel::euclidean_disk(1.0);
    const auto grid = euc.grid(1024);
    auto cps = critical_points(euc.boundary_distance_function({0.9, 0}, grid), grid);
    REQUIRE(cps.size() == 2);
    for (const auto& c : cps)
    {
        const double s = grid.param(c.where);
        const double target = c.kind == CriticalKind::minimum ? 0.0 : pi;
        CHECK(std::min(std::abs(s - target), two_pi - std::abs(s - target)) < 1e-9);
    }

    std::vector<double> constant(1024, 1.0);
    CHECK_THROWS_AS(critical_points(constant, grid), Error);

    // Dense angular scan oracle for an off-axis point.
    const Vec2 p(0.3, 0.4);
    cps = critical_points(euc.boundary_distance_function(p, grid), grid);
    REQUIRE(cps.size() == 2);
    double best_min = 1e9, arg_min = 0;
    for (int k = 0; k < 200000; ++k)
    {
        const double t = two_pi * k / 200000;
        const double d = norm(unit_from_angle(t) - p);
        if (d < best_min)
        {
            best_min = d;
            arg_min = t;
        }
    }
    for (const auto& c : cps)
    {
        const double s = grid.param(c.where);
        const double target = c.kind == CriticalKind::minimum ? arg_min : std::fmod(arg_min + pi, two_pi);
        CHECK(std::min(std::abs(s - target), two_pi - std::abs(s - target)) < 1e-3);
        // On the line through the origin and p.
        CHECK(std::abs(cross(unit_from_angle(s), p)) < 1e-3);
    }
}

TEST_CASE("second fundamental form")
{
    CHECK(ManifoldModel::euclidean_disk(1.0).second_fundamental_form(1.0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(ManifoldModel::euclidean_disk(2.5).second_fundamental_form(3.0) == doctest::Approx(0.4).epsilon(1e-6));
    // Hyperbolic disk: coth of the hyperbolic radius.
    const double rho = 2 * std::atanh(0.5);
    CHECK(ManifoldModel::curved_disk(-1.0, 0.5).second_fundamental_form(0.7) ==
          doctest::Approx(1.0 / std::tanh(rho)).epsilon(1e-6));

    // Non-radial conformal field: oracle k = c/R - d_r c from finite
    // differences of the speed values only.
    const std::string expr = "1 + 0.2*x + 0.1*y^2";
    auto field = make_expression_speed(expr);
    const auto m = ManifoldModel::conformal_disk(field, 1.0);
    for (double s : {0.0, 1.3, 4.4})
    {
        const Vec2 b = m.boundary_point(s);
        const Vec2 u = b / norm(b);
        const double h = 1e-5;
        const double c = field->eval(b).v;
        const double dr = (field->eval(b + u * h).v - field->eval(b - u * h).v) / (2 * h);
        CHECK(m.second_fundamental_form(s) == doctest::Approx(c / 1.0 - dr).epsilon(1e-5));
    }
}

TEST_CASE("Gauss curvature")
{
    CHECK(ManifoldModel::curved_disk(-1.0, 0.5).gauss_curvature({0.2, -0.3}) == doctest::Approx(-1.0));
    CHECK(ManifoldModel::curved_disk(0.5, 1.0).gauss_curvature({0.4, 0.1}) == doctest::Approx(0.5));
    CHECK(ManifoldModel::euclidean_disk(1.0).gauss_curvature({0.4, 0.1}) == 0.0);
}

TEST_CASE("Jacobi growth on constant curvature models")
{
    const auto hyp = ManifoldModel::curved_disk(-1.0, 0.5);
    auto fc = estimate(hyp, EstimateSpec{});
    const auto gc = derive(fc);
    std::mt19937_64 rng(8);
    for (int i = 0; i < 10; ++i)
    {
        const Vec2 x = random_point(rng, 0.4);
        const auto tr = hyp.jacobi_field(x, two_pi * i / 10.0, 10.0, 50);
        REQUIRE(!tr.t.empty());
        for (std::size_t k = 0; k < tr.t.size(); ++k)
        {
            CHECK(tr.j[k] == doctest::Approx(std::sinh(tr.t[k])).epsilon(1e-8));
            CHECK(tr.j[k] <= gc.b * tr.t[k] * (1 + 1e-9));
        }
    }
}

TEST_CASE("boundary chord bound and simplicity")
{
    const auto hyp = ManifoldModel::curved_disk(-1.0, 0.5);
    const auto fc = estimate(hyp, EstimateSpec{});
    const auto grid = hyp.grid(64);
    for (int i = 0; i < 64; i += 3)
        for (int j = i + 1; j < 64; j += 5)
        {
            const double dm = hyp.distance(hyp.boundary_point(grid.param(i)), hyp.boundary_point(grid.param(j)));
            const double db = grid.arc_distance(i, j);
            CHECK(dm <= db + 1e-12);
            CHECK(db <= fc.dist * dm);
        }
    const auto rep = hyp.check_simplicity(12, 12);
    CHECK(rep.ok());
    CHECK(rep.max_roundtrip_error < 1e-8);
}

TEST_CASE("model JSON round trip and validation")
{
    const auto m = ManifoldModel::from_json(nlohmann::json::parse(R"({"kind":"curved-disk","kappa":-1,"radius":0.5})"));
    CHECK(m.kind() == ModelKind::curved_disk);
    CHECK(ManifoldModel::from_json(m.to_json()).hash() == m.hash());
    CHECK_THROWS_AS(ManifoldModel::from_json(nlohmann::json::parse(R"({"kind":"torus","radius":1})")), Error);
    CHECK_THROWS_AS(ManifoldModel::from_json(nlohmann::json::parse(R"({"kind":"curved-disk","radius":1})")), Error);
    CHECK_THROWS_AS(ManifoldModel::curved_disk(2.0, 1.0), Error);
    const auto s = ManifoldModel::euclidean_disk(1.0).scaled(2.0);
    CHECK(s.distance({0, 0}, {0.5, 0}) == doctest::Approx(1.0));
    CHECK(s.second_fundamental_form(0.3) == doctest::Approx(0.5).epsilon(1e-6));
}
