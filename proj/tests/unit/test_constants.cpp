#include <doctest.h>

#include <cmath>

#include "lentil/constants.hpp"
#include "lentil/error.hpp"

using namespace lentil;

namespace {

FundamentalConstants base_example()
{
    FundamentalConstants f;
    f.diam = 2.0;
    f.sec_minus = 1e-14;
    f.sec_plus = std::pow(pi / 4.0, 2);  // C_diam sqrt(C_sec+) = pi/2
    f.exp = 1.0;
    f.jf = 1.0;
    f.sff = 1.0;
    f.dist = pi / 2;
    f.h1 = 1.0;
    f.h2 = 1e-9;
    return f;
}

}  // namespace

TEST_CASE("derive: hand-evaluated examples")
{
    const auto g = derive(base_example());
    CHECK(g.b == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(g.d == doctest::Approx(1.0));
    CHECK(g.c9 == doctest::Approx(2.0));
    CHECK(g.c10 == doctest::Approx(7.0));
    CHECK(g.c12 == doctest::Approx(8.0));
    CHECK(g.c19 == doctest::Approx(1.0));
    CHECK(g.a == doctest::Approx(2.0 / pi));
    CHECK(g.c == doctest::Approx(1.0));
    CHECK(g.c11 == doctest::Approx(4.0 * std::sqrt(10.0 / pi)).epsilon(1e-9));

    auto bad = base_example();
    bad.sec_plus = std::pow(pi / 2.0, 2);  // C_diam sqrt(C_sec+) = pi exactly
    CHECK_THROWS_AS(derive(bad), Error);
    bad = base_example();
    bad.jf = 0.0;
    CHECK_THROWS_AS(derive(bad), Error);
}

TEST_CASE("derive: cross relations and determinism")
{
    auto f = base_example();
    f.sec_minus = 0.3;
    f.exp = 1.3;
    f.jf = 2.1;
    const auto g = derive(f);
    CHECK(g.c9 == doctest::Approx(2.0 * g.d).epsilon(1e-15));
    CHECK(g.c12 == doctest::Approx(g.c10 + 1.0).epsilon(1e-15));
    CHECK(1.0 / g.c19 == doctest::Approx(0.5 * g.c9).epsilon(1e-15));
    CHECK(g.c10 == doctest::Approx(2.0 + g.c9 + g.g).epsilon(1e-15));
    CHECK(g.c11 == doctest::Approx(g.e * std::sqrt(g.c9)).epsilon(1e-14));
    CHECK(g.f == doctest::Approx(1.0 / g.a).epsilon(1e-15));
    const auto g2 = derive(f);
    CHECK(g2.to_json().dump() == g.to_json().dump());
}

TEST_CASE("estimate: unit Euclidean disk is close to the analytic values")
{
    const auto m = ManifoldModel::euclidean_disk(1.0);
    EstimateSpec spec;
    spec.safety_factor = 1.0;
    const auto f = estimate(m, spec);
    CHECK(f.diam == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(f.sff == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(f.dist == doctest::Approx(pi / 2).epsilon(1e-3));
    CHECK(f.exp == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(f.jf == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(f.h1 == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(f.diam * std::sqrt(f.sec_plus) == doctest::Approx(pi / 2));

    spec.safety_factor = 1.1;
    const auto g = estimate(m, spec);
    CHECK(g.diam == doctest::Approx(1.1 * f.diam));
    CHECK(g.h1 == doctest::Approx(f.h1 / 1.1));
    CHECK_NOTHROW(derive(g));
}

TEST_CASE("estimate: hyperbolic disk curvature and scaling law")
{
    const auto m = ManifoldModel::curved_disk(-1.0, 0.5);
    EstimateSpec spec;
    spec.safety_factor = 1.0;
    const auto f = estimate(m, spec);
    CHECK(f.sec_minus == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(f.diam * std::sqrt(f.sec_plus) < pi);
    CHECK_NOTHROW(derive(f));

    const auto e1 = estimate(ManifoldModel::euclidean_disk(1.0), spec);
    const auto e2 = estimate(ManifoldModel::euclidean_disk(1.0).scaled(2.0), spec);
    CHECK(e2.diam == doctest::Approx(2.0 * e1.diam).epsilon(1e-9));
    CHECK(e2.sff == doctest::Approx(0.5 * e1.sff).epsilon(1e-6));

    spec.boundary_samples = 3;
    CHECK_THROWS_AS(estimate(m, spec), Error);
}
