#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <random>

#include "lentil/error.hpp"
#include "lentil/parallel.hpp"
#include "lentil/reconstruct.hpp"

namespace lentil {

namespace {

// Upper bound of the effective speed c over the disk: a metric ball of
// radius rho fits inside the coordinate ball of radius rho * c_max.
double speed_max(const ManifoldModel& m)
{
    double c = 0;
    const double R = m.radius();
    for (int i = 0; i <= 32; ++i)
        for (int k = 0; k < 64; ++k)
        {
            const double r = R * i / 32.0;
            c = std::max(c, m.speed(unit_from_angle(two_pi * k / 64) * r).v);
        }
    return 1.05 * c;
}

Vec2 random_in_disk(std::mt19937_64& rng, double R)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = R * std::sqrt(u(rng));
    return unit_from_angle(two_pi * u(rng)) * r;
}

std::vector<Vec2> density_probe(const ManifoldModel& m, std::size_t samples, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::vector<Vec2> z;
    z.reserve(samples + 4096);
    for (std::size_t i = 0; i < samples; ++i)
        z.push_back(random_in_disk(rng, m.radius()));
    const auto g = m.grid(4096);
    for (const auto& b : m.boundary_nodes(g))
        z.push_back(b);
    return z;
}

}  // namespace

void ExplicitPointSet::near(Vec2 q, double radius, const std::function<void(Vec2)>& f) const
{
    for (const auto& p : pts_)
        if (norm(p - q) <= radius)
            f(p);
}

void ExplicitPointSet::outer(double r_min, const std::function<void(Vec2)>& f) const
{
    for (const auto& p : pts_)
        if (norm(p) >= r_min)
            f(p);
}

TriangularLattice::TriangularLattice(double spacing, double radius, Vec2 offset)
    : a_(spacing), radius_(radius), offset_(offset)
{
    require(spacing > 0 && radius > 0, ErrorCode::invalid_argument, "lattice: spacing and radius must be positive");
}

void TriangularLattice::near(Vec2 q, double radius, const std::function<void(Vec2)>& f) const
{
    const double hy = a_ * std::sqrt(3.0) / 2;
    const auto j0 = static_cast<std::int64_t>(std::ceil((q.y - offset_.y - radius) / hy - 1e-9));
    const auto j1 = static_cast<std::int64_t>(std::floor((q.y - offset_.y + radius) / hy + 1e-9));
    for (auto j = j0; j <= j1; ++j)
    {
        const double y = offset_.y + hy * static_cast<double>(j);
        const double x0 = offset_.x + 0.5 * a_ * static_cast<double>(j);
        const auto i0 = static_cast<std::int64_t>(std::ceil((q.x - radius - x0) / a_ - 1e-9));
        const auto i1 = static_cast<std::int64_t>(std::floor((q.x + radius - x0) / a_ + 1e-9));
        for (auto i = i0; i <= i1; ++i)
        {
            const Vec2 p(x0 + a_ * static_cast<double>(i), y);
            if (norm(p - q) <= radius && norm(p) < radius_)
                f(p);
        }
    }
}

void TriangularLattice::outer(double r_min, const std::function<void(Vec2)>& f) const
{
    const double hy = a_ * std::sqrt(3.0) / 2;
    const double R = radius_;
    const auto j0 = static_cast<std::int64_t>(std::ceil((-R - offset_.y) / hy - 1e-9));
    const auto j1 = static_cast<std::int64_t>(std::floor((R - offset_.y) / hy + 1e-9));
    for (auto j = j0; j <= j1; ++j)
    {
        const double y = offset_.y + hy * static_cast<double>(j);
        if (std::abs(y) >= R)
            continue;
        const double xo = std::sqrt(R * R - y * y);
        const double xi = r_min > std::abs(y) ? std::sqrt(r_min * r_min - y * y) : 0.0;
        const double x0 = offset_.x + 0.5 * a_ * static_cast<double>(j);
        auto run = [&](double lo, double hi) {
            const auto i0 = static_cast<std::int64_t>(std::ceil((lo - x0) / a_ - 1e-9));
            const auto i1 = static_cast<std::int64_t>(std::floor((hi - x0) / a_ + 1e-9));
            for (auto i = i0; i <= i1; ++i)
            {
                const Vec2 p(x0 + a_ * static_cast<double>(i), y);
                const double n = norm(p);
                if (n < R && n >= r_min)
                    f(p);
            }
        };
        if (xi > 0)
        {
            run(-xo, -xi);
            run(xi, xo);
        }
        else
            run(-xo, xo);
    }
}

std::size_t TriangularLattice::size_estimate() const
{
    return static_cast<std::size_t>(pi * radius_ * radius_ / (a_ * a_ * std::sqrt(3.0) / 2));
}

DensityMeasurement measure_density(const ManifoldModel& model, const PointSet& pts, std::size_t samples,
                                   std::uint64_t seed)
{
    const auto z = density_probe(model, samples, seed);
    const double cmax = speed_max(model);
    const double R = model.radius();
    std::vector<double> nearest(z.size(), std::numeric_limits<double>::infinity());
    parallel_for(z.size(), [&](std::size_t i) {
        // Grow a coordinate search disk until it holds a point, then widen it
        // to the metric radius of the best candidate.
        double rho = 1e-3 * R;
        double best = std::numeric_limits<double>::infinity();
        while (!std::isfinite(best) && rho < 4 * R)
        {
            pts.near(z[i], rho, [&](Vec2 p) { best = std::min(best, model.distance(z[i], p)); });
            rho *= 2;
        }
        if (std::isfinite(best))
            pts.near(z[i], best * cmax, [&](Vec2 p) { best = std::min(best, model.distance(z[i], p)); });
        nearest[i] = best;
    });
    DensityMeasurement d;
    d.samples = z.size();
    for (std::size_t i = 0; i < z.size(); ++i)
        if (nearest[i] > d.density || i == 0)
        {
            d.density = nearest[i];
            d.worst = z[i];
        }
    return d;
}

DensityMeasurement measure_density(const ManifoldModel& model, const std::vector<Vec2>& pts, std::size_t samples,
                                   std::uint64_t seed)
{
    require(!pts.empty(), ErrorCode::invalid_argument, "measure_density: empty point set");
    const auto z = density_probe(model, samples, seed);
    std::vector<double> nearest(z.size());
    parallel_for(z.size(), [&](std::size_t i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& p : pts)
            best = std::min(best, model.distance(z[i], p));
        nearest[i] = best;
    });
    DensityMeasurement d;
    d.samples = z.size();
    const auto it = std::max_element(nearest.begin(), nearest.end());
    d.density = *it;
    d.worst = z[static_cast<std::size_t>(it - nearest.begin())];
    return d;
}

ModelHessian model_boundary_hessian(const ManifoldModel& model, Vec2 p)
{
    ModelHessian h;
    h.param = model.nearest_boundary_param(p);
    h.depth = model.distance_to_boundary(p);
    const double L = model.boundary_length();
    if (!(h.depth > 1e-12 * model.diameter()))
    {
        h.lambda = std::numeric_limits<double>::infinity();
        return h;
    }
    auto f = [&](double t) { return model.distance(p, model.boundary_point(h.param + t)); };
    const double f0 = f(0.0);
    auto second = [&](double step) { return (f(step) - 2 * f0 + f(-step)) / (step * step); };
    const double step = std::min(0.05 * h.depth, L / 64);
    h.lambda = (4 * second(0.5 * step) - second(step)) / 3;
    return h;
}

nlohmann::json ReverseReport::to_json() const
{
    nlohmann::json j;
    j["epsilon"] = epsilon;
    j["epsilon_hat"] = epsilon_hat;
    j["hat_branch"] = hat_branch;
    j["density"] = {{"value", density.density}, {"worst", {density.worst.x, density.worst.y}}, {"samples", density.samples}};
    j["applicable"] = applicable;
    j["status"] = status;
    if (applicable)
    {
        j["epsilon1"] = epsilon1;
        j["E"] = e_global;
        j["epsilon2"] = epsilon2;
        j["delta"] = delta;
        j["bound"] = bound;
        j["bound_ok"] = bound_ok;
        j["gamma_size"] = gamma_size;
        j["band_points"] = band_points;
        j["pairs_sampled"] = pairs_sampled;
        j["lentils_tested"] = lentils_tested;
        j["lentils_failed"] = lentils_failed;
    }
    return j;
}

ReverseReport reverse_check(const ManifoldModel& model, const PointSet& pts, const GeometryConstants& gc,
                            const ReverseSpec& spec)
{
    require(spec.epsilon > 0, ErrorCode::invalid_argument, "reverse_check: epsilon must be positive");
    ReverseReport rep;
    rep.epsilon = spec.epsilon;
    const double b1 = gc.c25, b2 = gc.c26 * spec.epsilon, b3 = gc.c27 * spec.epsilon * spec.epsilon;
    rep.epsilon_hat = std::min({b1, b2, b3});
    rep.hat_branch = rep.epsilon_hat == b1 ? "C25" : rep.epsilon_hat == b2 ? "C26*eps" : "C27*eps^2";
    rep.density = measure_density(model, pts, spec.density_samples, spec.seed);
    rep.applicable = rep.density.density <= rep.epsilon_hat;
    if (!rep.applicable)
    {
        rep.status = "NOT-APPLICABLE";
        return rep;
    }
    rep.epsilon1 = gc.c19 * rep.epsilon_hat;
    const double cmax = speed_max(model);
    const double R = model.radius();
    const BoundaryGrid fine = model.grid(spec.fine_grid);
    const double h = fine.spacing();
    const auto nf = static_cast<std::size_t>(fine.size());

    // Only points with E_p < U matter for E(x) <= U, and E_p >= d(p, bdry);
    // widen the band until the resulting E fits inside it.
    struct BandPoint
    {
        Vec2 p;
        double e;
    };
    std::vector<BandPoint> band;
    double B = std::max(4 * rep.epsilon_hat, 2 * rep.epsilon1);
    double U = 0;
    for (int round = 0;; ++round)
    {
        std::vector<Vec2> cand;
        pts.outer(std::max(0.0, R - B * cmax), [&](Vec2 p) { cand.push_back(p); });
        std::vector<double> depth(cand.size()), e(cand.size(), std::numeric_limits<double>::infinity());
        std::vector<double> param(cand.size());
        parallel_for(cand.size(), [&](std::size_t i) {
            depth[i] = model.distance_to_boundary(cand[i]);
            if (depth[i] >= B)
                return;
            const auto mh = model_boundary_hessian(model, cand[i]);
            param[i] = mh.param;
            e[i] = std::isinf(mh.lambda) ? 0.0 : proximity_e(mh.lambda, gc).as_double();
        });
        band.clear();
        std::vector<double> en(nf, std::numeric_limits<double>::infinity());
        for (std::size_t i = 0; i < cand.size(); ++i)
        {
            if (depth[i] >= B || !std::isfinite(e[i]))
                continue;
            band.push_back({cand[i], e[i]});
            const GridParam g = fine.locate(param[i]);
            const double t = g.frac * h;
            auto& a = en[static_cast<std::size_t>(g.node)];
            auto& b = en[static_cast<std::size_t>(fine.wrap(g.node + 1))];
            a = std::min(a, e[i] + t);
            b = std::min(b, e[i] + h - t);
        }
        // Cyclic distance transform along the boundary.
        for (int pass = 0; pass < 2; ++pass)
        {
            for (std::size_t k = 0; k < nf; ++k)
                en[k] = std::min(en[k], en[(k + nf - 1) % nf] + h);
            for (std::size_t k = nf; k-- > 0;)
                en[k] = std::min(en[k], en[(k + 1) % nf] + h);
        }
        U = *std::max_element(en.begin(), en.end()) + 0.5 * h;
        if (U < B || round >= 8)
            break;
        B *= 2;
    }
    rep.band_points = band.size();
    rep.e_global = U;
    rep.epsilon2 = rep.epsilon1 + U;
    rep.delta = gc.c9 * rep.epsilon2;
    rep.bound = gc.c12 * rep.epsilon2 + gc.c11 * std::sqrt(rep.epsilon2);
    rep.bound_ok = std::isfinite(U) && rep.bound < spec.epsilon;

    std::vector<Vec2> gamma;
    for (const auto& b : band)
        if (b.e < rep.epsilon1)
            gamma.push_back(b.p);
    rep.gamma_size = gamma.size();

    std::mt19937_64 rng(spec.seed ^ 0x5eedULL);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    if (gamma.size() >= 2)
    {
        std::uniform_int_distribution<std::size_t> pick(0, gamma.size() - 1);
        for (std::size_t k = 0; k < spec.pair_samples; ++k)
        {
            const auto a = pick(rng), b = pick(rng);
            if (a != b)
                pairs.emplace_back(a, b);
        }
    }
    const double delta = rep.delta;
    std::vector<std::size_t> tested(pairs.size(), 0), failed(pairs.size(), 0);
    std::vector<char> used(pairs.size(), 0);
    parallel_for(pairs.size(), [&](std::size_t i) {
        const Vec2 x = gamma[pairs[i].first], y = gamma[pairs[i].second];
        const double d = model.distance(x, y);
        if (!(d > delta))
            return;
        used[i] = 1;
        for (int k = 0; k < spec.r_grid; ++k)
        {
            const double r = delta + (d - delta) * (k + 1) / (spec.r_grid + 1);
            const double s = d - r + delta;
            const Vec2 m = model.geodesic_point(x, y, r - 0.5 * delta);
            bool found = false;
            auto test = [&](Vec2 w) {
                if (!found && model.distance(w, x) < r && model.distance(w, y) < s)
                    found = true;
            };
            pts.near(m, 0.5 * delta * cmax, test);
            if (!found)
                pts.near(m, (delta + rep.epsilon_hat) * cmax, test);
            ++tested[i];
            if (!found)
                ++failed[i];
        }
    });
    for (std::size_t i = 0; i < pairs.size(); ++i)
    {
        rep.pairs_sampled += used[i];
        rep.lentils_tested += tested[i];
        rep.lentils_failed += failed[i];
    }
    rep.status = rep.bound_ok && rep.lentils_failed == 0 ? "PASS" : "FAIL";
    return rep;
}

nlohmann::json LentilGeometryReport::to_json() const
{
    return {{"lentils", lentils},
            {"diameter_fail", diameter_fail},
            {"midpoint_fail", midpoint_fail},
            {"ball_fail", ball_fail},
            {"transversal_fail", transversal_fail},
            {"cover_points", cover_points},
            {"geodesic_fail", geodesic_fail},
            {"cover_fail", cover_fail},
            {"worst_diameter_ratio", worst_diameter_ratio},
            {"worst_transversal_ratio", worst_transversal_ratio},
            {"status", pass() ? "PASS" : "FAIL"}};
}

namespace {

// Largest t in [0, hi] with pred(exp(x, t u)) true, assuming the true set is
// an interval starting at 0.
double ray_exit(const ManifoldModel& m, Vec2 x, Vec2 u, double hi, const std::function<bool(Vec2)>& pred)
{
    auto inside = [&](double t) {
        const auto q = m.exp_map(x, u * t);
        return q && pred(*q);
    };
    double lo = 0;
    if (inside(hi))
        return hi;
    for (int it = 0; it < 60; ++it)
    {
        const double mid = 0.5 * (lo + hi);
        (inside(mid) ? lo : hi) = mid;
    }
    return lo;
}

Vec2 unit(Vec2 v) { return v / norm(v); }

}  // namespace

LentilGeometryReport lentil_geometry_checks(const ManifoldModel& model, const GeometryConstants& gc,
                                            const LentilGeometrySpec& spec)
{
    LentilGeometryReport rep;
    const double R = model.radius();
    const double tol = 10 * model.tol_dist();
    const double diam = model.diameter();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    struct Lentil
    {
        Vec2 x, y;
        double r, s, delta, d;
    };
    std::vector<Lentil> lentils;
    while (lentils.size() < spec.lentils)
    {
        Lentil l;
        l.x = random_in_disk(rng, 0.95 * R);
        l.y = random_in_disk(rng, 0.95 * R);
        l.d = model.distance(l.x, l.y);
        const double ud = u(rng), ur = u(rng);
        if (l.d < 0.05 * diam)
            continue;
        l.delta = l.d * (0.005 + 0.3 * ud);
        l.r = l.delta + (l.d - l.delta) * (0.02 + 0.96 * ur);
        l.s = l.d - l.r + l.delta;
        lentils.push_back(l);
    }
    rep.lentils = lentils.size();

    struct Outcome
    {
        bool diameter = true, midpoint = true, ball = true, transversal = true;
        double diam_ratio = 0, trans_ratio = 0;
    };
    std::vector<Outcome> out(lentils.size());
    parallel_for(lentils.size(), [&](std::size_t i) {
        const auto& l = lentils[i];
        auto& o = out[i];
        auto in_lentil = [&](Vec2 z) {
            return model.contains(z) && model.distance(z, l.x) < l.r + tol && model.distance(z, l.y) < l.s + tol;
        };
        const Vec2 m = model.geodesic_point(l.x, l.y, l.r - 0.5 * l.delta);
        o.midpoint = std::abs(model.distance(m, l.x) - (l.r - 0.5 * l.delta)) <= tol &&
                     std::abs(model.distance(m, l.y) - (l.s - 0.5 * l.delta)) <= tol;

        const int rays = spec.boundary_rays;
        const double hi = 2 * std::max(l.r, l.s);
        std::vector<Vec2> edge;
        for (int k = 0; k < rays; ++k)
        {
            const Vec2 dir = unit_from_angle(two_pi * (k + 0.5) / rays);
            const double t = ray_exit(model, m, dir, hi, in_lentil);
            if (auto q = model.exp_map(m, dir * t))
                edge.push_back(*q);
            // Ball of radius delta/2 about the midpoint.
            const auto b = model.exp_map(m, dir * (0.5 * l.delta * (1 - 1e-6)));
            if (b && !in_lentil(*b))
                o.ball = false;
        }
        double dmax = 0;
        for (std::size_t a = 0; a < edge.size(); ++a)
            for (std::size_t b = a + 1; b < edge.size(); ++b)
                dmax = std::max(dmax, model.distance(edge[a], edge[b]));
        const double dbound = l.delta + gc.e * std::sqrt(l.delta);
        o.diam_ratio = dmax / dbound;
        o.diameter = dmax <= dbound + tol;

        // Transversal radius along the normal to the axis at m.
        const Vec2 axis = unit(model.log_map(m, l.y));
        const Vec2 nrm = perp(axis);
        const double ra = ray_exit(model, m, nrm, hi, in_lentil);
        const double rb = ray_exit(model, m, -nrm, hi, in_lentil);
        const double trans = std::min(ra, rb);
        const double tbound = std::min(gc.h * std::sqrt(l.delta * std::min(l.r, l.s)), 0.5 * gc.base.diam);
        o.trans_ratio = tbound / trans;
        o.transversal = trans + tol > tbound;
    });
    for (const auto& o : out)
    {
        rep.diameter_fail += !o.diameter;
        rep.midpoint_fail += !o.midpoint;
        rep.ball_fail += !o.ball;
        rep.transversal_fail += !o.transversal;
        rep.worst_diameter_ratio = std::max(rep.worst_diameter_ratio, o.diam_ratio);
        rep.worst_transversal_ratio = std::max(rep.worst_transversal_ratio, o.trans_ratio);
    }

    // Covering: Gamma is a chain of points at depth eps1/2, eps2/2 apart
    // along the boundary.
    const double e1 = spec.epsilon1, e2 = spec.epsilon2;
    const double L = model.boundary_length();
    const auto ng = static_cast<std::size_t>(std::ceil(L / (0.5 * e2)));
    std::vector<Vec2> gamma(ng);
    parallel_for(ng, [&](std::size_t k) {
        const double s = L * static_cast<double>(k) / static_cast<double>(ng);
        const Vec2 b = model.boundary_point(s);
        const auto q = model.exp_map(b * (1 - 1e-12), -unit(b) * (0.5 * e1));
        gamma[k] = q ? *q : b * (1 - 0.5 * e1 / R);
    });
    auto nearest_gamma = [&](Vec2 b) {
        const double s = model.boundary_param(b);
        auto k = static_cast<std::size_t>(std::llround(s / L * static_cast<double>(ng))) % ng;
        return gamma[k];
    };
    const double need = e1 + gc.g * e2;
    std::vector<std::pair<Vec2, Vec2>> probes;
    while (probes.size() < spec.cover_points)
    {
        const Vec2 z = random_in_disk(rng, R);
        const Vec2 dir = unit_from_angle(two_pi * u(rng));
        if (model.distance_to_boundary(z) >= need)
            probes.emplace_back(z, dir);
    }
    rep.cover_points = probes.size();
    std::vector<char> geo_ok(probes.size(), 1), cov_ok(probes.size(), 1);
    const double delta = gc.c9 * e2;
    parallel_for(probes.size(), [&](std::size_t i) {
        const auto [z, dir] = probes[i];
        auto inside = [&](Vec2) { return true; };
        const double t1 = ray_exit(model, z, dir, 2 * diam, inside);
        const double t2 = ray_exit(model, z, -dir, 2 * diam, inside);
        const Vec2 b1 = *model.exp_map(z, dir * t1), b2 = *model.exp_map(z, -dir * t2);
        const Vec2 x = nearest_gamma(b1), y = nearest_gamma(b2);
        const double dxy = model.distance(x, y);
        // Golden section for the point of the x-y geodesic nearest to z.
        auto gap = [&](double t) { return model.distance(z, model.geodesic_point(x, y, t)); };
        double a = 0, b = dxy;
        const double phi = 0.5 * (std::sqrt(5.0) - 1);
        double c = b - phi * (b - a), d = a + phi * (b - a);
        double fc = gap(c), fd = gap(d);
        for (int it = 0; it < 80; ++it)
        {
            if (fc < fd)
            {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = gap(c);
            }
            else
            {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = gap(d);
            }
        }
        const double tz = 0.5 * (a + b);
        const Vec2 zp = model.geodesic_point(x, y, tz);
        if (model.distance(z, zp) > gc.d * e2)
            geo_ok[i] = 0;
        const double r = model.distance(x, zp) + 0.5 * delta;
        const double s = model.distance(zp, y) + 0.5 * delta;
        if (!(model.distance(z, x) < r && model.distance(z, y) < s))
            cov_ok[i] = 0;
    });
    for (std::size_t i = 0; i < probes.size(); ++i)
    {
        rep.geodesic_fail += !geo_ok[i];
        rep.cover_fail += !cov_ok[i];
    }
    return rep;
}

}  // namespace lentil
