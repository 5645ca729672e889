#include "lentil/constants.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "lentil/error.hpp"
#include "lentil/parallel.hpp"

namespace lentil {

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }
double sinhc(double x) { return x == 0.0 ? 1.0 : std::sinh(x) / x; }
double vercos(double x) { return 1.0 + std::cos(x); }

namespace {

const char* const fundamental_names[] = {"C_diam", "C_sec-", "C_sec+", "C_exp", "C_JF",
                                         "C_SFF",  "C_dist", "C_H1",   "C_H2"};

std::array<double*, 9> fields(FundamentalConstants& f)
{
    return {&f.diam, &f.sec_minus, &f.sec_plus, &f.exp, &f.jf, &f.sff, &f.dist, &f.h1, &f.h2};
}

}  // namespace

nlohmann::json FundamentalConstants::to_json() const
{
    nlohmann::json j;
    auto copy = *this;
    auto fs = fields(copy);
    for (std::size_t k = 0; k < fs.size(); ++k)
        j[fundamental_names[k]] = *fs[k];
    if (!estimated.empty())
        j["estimated"] = estimated;
    return j;
}

FundamentalConstants FundamentalConstants::from_json(const nlohmann::json& j)
{
    if (!j.is_object())
        fail(ErrorCode::parse, "constants: expected a JSON object");
    FundamentalConstants f;
    auto fs = fields(f);
    for (std::size_t k = 0; k < fs.size(); ++k)
    {
        const char* name = fundamental_names[k];
        if (!j.contains(name))
            fail(ErrorCode::parse, std::string("constants: missing field '") + name + "'");
        if (!j[name].is_number())
            fail(ErrorCode::parse, std::string("constants: field '") + name + "' must be a number");
        *fs[k] = j[name].get<double>();
    }
    if (j.contains("estimated"))
        f.estimated = j["estimated"].get<std::vector<std::string>>();
    return f;
}

nlohmann::json GeometryConstants::to_json() const
{
    nlohmann::json j = base.to_json();
    j["C_a"] = a;
    j["C_b"] = b;
    j["C_c"] = c;
    j["C_d"] = d;
    j["C_e"] = e;
    j["C_f"] = f;
    j["C_g"] = g;
    j["C_h"] = h;
    j["C_i"] = i;
    j["C9"] = c9;
    j["C10"] = c10;
    j["C11"] = c11;
    j["C12"] = c12;
    j["C13"] = c13;
    j["C19"] = c19;
    j["C25"] = c25;
    j["C26"] = c26;
    j["C27"] = c27;
    return j;
}

GeometryConstants derive(const FundamentalConstants& fc)
{
    auto copy = fc;
    auto fs = fields(copy);
    for (std::size_t k = 0; k < fs.size(); ++k)
        if (!(std::isfinite(*fs[k]) && *fs[k] > 0))
            fail(ErrorCode::constraint,
                 std::string("constants: ") + fundamental_names[k] + " must be finite and > 0");
    const double arg_plus = fc.diam * std::sqrt(fc.sec_plus);
    if (!(arg_plus < pi))
        fail(ErrorCode::constraint, "constants: violated C_diam * sqrt(C_sec+) < pi (value " +
                                        std::to_string(arg_plus) + ")");
    const double arg_minus = fc.diam * std::sqrt(fc.sec_minus);

    GeometryConstants g;
    g.base = fc;
    g.a = sinc(arg_plus);
    g.b = sinhc(arg_minus);
    g.c13 = g.b;
    g.c = vercos(arg_plus);
    g.d = fc.exp * g.c13;
    g.e = 2.0 * std::sqrt(5.0) * std::sqrt(g.a) * g.c13 * std::sqrt(fc.diam);
    g.f = 1.0 / g.a;
    g.g = 3.0 * g.d;
    g.h = std::pow(2.0, -1.5) * std::pow(g.c, 0.25);
    g.i = 2.0 / std::sqrt(g.c);
    g.c9 = 2.0 * g.d;
    g.c10 = 2.0 + 5.0 * fc.exp * g.c13;
    g.c11 = 2.0 * std::sqrt(10.0) * std::sqrt(fc.diam) * std::sqrt(fc.exp) * std::sqrt(g.a) *
            std::pow(g.c13, 1.5);
    g.c12 = g.c10 + 1.0;
    g.c19 = 1.0 / (fc.exp * g.c13);
    g.c25 = fc.h1 / (2.0 * (fc.h2 + fc.sff));
    const double k = g.c19 + 2.0 * fc.jf / fc.h1 + 2.0 * fc.dist;
    g.c26 = 1.0 / (2.0 * g.c12 * k);
    g.c27 = 1.0 / (4.0 * g.c11 * g.c11 * k);

    const double derived[] = {g.a, g.b, g.c, g.d, g.e, g.f, g.g, g.h, g.i, g.c9,
                              g.c10, g.c11, g.c12, g.c19, g.c25, g.c26, g.c27};
    for (double v : derived)
        if (!(std::isfinite(v) && v > 0))
            fail(ErrorCode::constraint, "constants: a derived constant is not finite and positive");
    return g;
}

FundamentalConstants euclidean_disk_constants(double radius)
{
    require(radius > 0, ErrorCode::invalid_argument, "radius must be > 0");
    FundamentalConstants f;
    f.diam = 2.0 * radius;
    f.sec_minus = EstimateSpec{}.sec_minus_floor;
    f.sec_plus = std::pow(pi / (2.0 * f.diam), 2);
    f.exp = 1.0;
    f.jf = 1.0;
    f.sff = 1.0 / radius;
    f.dist = 0.5 * pi;
    f.h1 = 1.0;
    f.h2 = EstimateSpec{}.h2_floor;
    return f;
}

FundamentalConstants estimate(const ManifoldModel& model, const EstimateSpec& spec)
{
    require(spec.boundary_samples >= spec.min_samples && spec.interior_samples >= spec.min_samples &&
                spec.geodesic_samples >= spec.min_samples,
            ErrorCode::invalid_argument,
            "constants estimate: sample counts below the configured minimum of " +
                std::to_string(spec.min_samples));
    require(spec.safety_factor >= 1.0, ErrorCode::invalid_argument, "constants estimate: safety factor < 1");
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const double radius = model.radius();
    const double length = model.boundary_length();
    const double sf = spec.safety_factor;

    auto random_interior = [&](double max_frac) {
        const double r = radius * max_frac * std::sqrt(uni(rng));
        return unit_from_angle(two_pi * uni(rng)) * r;
    };

    // Boundary samples: diameter, chord ratio, boundary curvature.
    const int nb = spec.boundary_samples;
    std::vector<Vec2> bpts(nb);
    std::vector<double> bpar(nb);
    for (int i = 0; i < nb; ++i)
    {
        bpar[i] = length * i / nb;
        bpts[i] = model.boundary_point(bpar[i]);
    }
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < nb; ++i)
        for (int j = i + 1; j < nb; ++j)
            pairs.emplace_back(i, j);
    std::vector<double> dmat(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t k) {
        dmat[k] = model.distance(bpts[pairs[k].first], bpts[pairs[k].second]);
    });
    double diam = 0.0, dist_ratio = 1.0;
    for (std::size_t k = 0; k < pairs.size(); ++k)
    {
        diam = std::max(diam, dmat[k]);
        double arc = std::abs(bpar[pairs[k].first] - bpar[pairs[k].second]);
        arc = std::min(arc, length - arc);
        dist_ratio = std::max(dist_ratio, arc / dmat[k]);
    }
    std::vector<double> sff(nb);
    parallel_for(sff.size(), [&](std::size_t i) { sff[i] = model.second_fundamental_form(bpar[i]); });
    const double sff_max = *std::max_element(sff.begin(), sff.end());

    // Curvature over the interior and the boundary.
    double kmin = std::numeric_limits<double>::infinity(), kmax = -kmin;
    for (int i = 0; i < spec.interior_samples; ++i)
    {
        const double k = model.gauss_curvature(random_interior(1.0));
        kmin = std::min(kmin, k);
        kmax = std::max(kmax, k);
    }
    for (const Vec2& b : bpts)
    {
        const double k = model.gauss_curvature(b);
        kmin = std::min(kmin, k);
        kmax = std::max(kmax, k);
    }

    // Lipschitz quotients of the log map.
    struct Triple
    {
        Vec2 x, y1, y2;
    };
    std::vector<Triple> triples(static_cast<std::size_t>(spec.geodesic_samples) * 4);
    for (auto& t : triples)
    {
        t.x = random_interior(0.95);
        t.y1 = random_interior(1.0);
        t.y2 = random_interior(1.0);
    }
    std::vector<double> exp_ratio(triples.size(), 0.0);
    parallel_for(triples.size(), [&](std::size_t k) {
        const auto& t = triples[k];
        const double d = model.distance(t.y1, t.y2);
        if (d <= 1e-9 * radius)
            return;
        exp_ratio[k] = norm(model.log_map(t.x, t.y1) - model.log_map(t.x, t.y2)) / d;
    });
    const double c_exp = std::max(1.0, *std::max_element(exp_ratio.begin(), exp_ratio.end()));

    // Jacobi fields along random geodesics: t j'/j bounds C_JF from below and
    // j'/j >= C_H1/t - C_H2 on every sample.
    struct Ray
    {
        Vec2 x;
        double theta;
    };
    std::vector<Ray> rays(static_cast<std::size_t>(spec.geodesic_samples));
    for (std::size_t k = 0; k < rays.size(); ++k)
    {
        if (k % 2 == 0)
        {
            const double s = length * uni(rng);
            const double phi = angle_of(model.boundary_point(s));
            rays[k] = {model.boundary_point(s), phi + 0.5 * pi + pi * (0.05 + 0.9 * uni(rng))};
        }
        else
            rays[k] = {random_interior(0.9), two_pi * uni(rng)};
    }
    std::vector<JacobiTrace> traces(rays.size());
    const double t_span = 4.0 * diam;
    parallel_for(rays.size(), [&](std::size_t k) {
        traces[k] = model.jacobi_field(rays[k].x, rays[k].theta, t_span, spec.jacobi_steps * 4);
    });
    double jf = 0.0, h1 = std::numeric_limits<double>::infinity();
    for (const auto& tr : traces)
        for (std::size_t i = 0; i < tr.t.size(); ++i)
        {
            if (tr.j[i] <= 0)
                fail(ErrorCode::constraint, "constants estimate: Jacobi field vanished (conjugate point)");
            const double q = tr.t[i] * tr.dj[i] / tr.j[i];
            jf = std::max(jf, q);
            h1 = std::min(h1, q);
        }
    require(std::isfinite(h1), ErrorCode::degenerate, "constants estimate: no Jacobi samples");
    h1 = std::min(h1, 1.0) / sf;
    double h2 = 0.0;
    for (const auto& tr : traces)
        for (std::size_t i = 0; i < tr.t.size(); ++i)
            h2 = std::max(h2, h1 / tr.t[i] - tr.dj[i] / tr.j[i]);

    FundamentalConstants f;
    f.diam = diam * sf;
    f.sec_minus = std::max(-kmin * sf, spec.sec_minus_floor);
    const double floor_plus =
        spec.sec_plus_floor > 0 ? spec.sec_plus_floor : std::pow(pi / (2.0 * f.diam), 2);
    f.sec_plus = std::max(kmax * sf, floor_plus);
    f.exp = c_exp * sf;
    f.jf = std::max(jf, 1.0) * sf;
    f.sff = sff_max * sf;
    f.dist = dist_ratio * sf;
    f.h1 = h1;
    f.h2 = std::max(h2 * sf, spec.h2_floor);
    f.estimated = {"C_diam", "C_sec-", "C_sec+", "C_exp", "C_JF", "C_SFF", "C_dist", "C_H1", "C_H2"};
    return f;
}

}  // namespace lentil
