#include "lentil/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <mutex>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <boost/numeric/odeint.hpp>

#include "lentil/error.hpp"
#include "lentil/parallel.hpp"

namespace lentil {

namespace ode = boost::numeric::odeint;
using cplx = std::complex<double>;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double wrap_pm_pi(double a)
{
    a = std::fmod(a + pi, two_pi);
    if (a < 0)
        a += two_pi;
    return a - pi;
}

double wrap_0_2pi(double a)
{
    a = std::fmod(a, two_pi);
    if (a < 0)
        a += two_pi;
    return a;
}

template <std::size_t N>
using State = std::array<double, N>;

template <std::size_t N>
struct Traced
{
    State<N> s{};
    double t = 0.0;
    bool exited = false;
    bool stopped = false;
};

// Integrates a ray ODE whose first two components are the position. Stops at
// t_max, when the ray leaves |x| <= R, or when stop(s) crosses zero upward.
// obs(t, s) is called at each requested sample time reached.
template <std::size_t N, class Rhs, class Stop, class Obs>
Traced<N> trace(const Rhs& rhs, const State<N>& s0, double t_max, double radius, const Stop& stop,
                const std::vector<double>& times, const Obs& obs, double tol, double dt0)
{
    auto stepper = ode::make_dense_output(tol, tol, ode::runge_kutta_dopri5<State<N>>());
    auto sys = [&](const State<N>& s, State<N>& ds, double) { rhs(s, ds); };
    stepper.initialize(s0, 0.0, dt0);
    const double r2 = radius * radius;
    auto gexit = [&](const State<N>& s) { return s[0] * s[0] + s[1] * s[1] - r2; };

    // A start on the boundary counts as inside so the first exit is seen.
    double ge_prev = gexit(s0);
    if (ge_prev >= 0)
        ge_prev = -1.0;
    double gs_prev = stop(s0);
    std::size_t next = 0;

    auto bisect = [&](double lo, double hi, auto&& g) {
        State<N> tmp;
        for (int it = 0; it < 80 && hi - lo > 1e-15 * std::max(1.0, hi); ++it)
        {
            const double mid = 0.5 * (lo + hi);
            stepper.calc_state(mid, tmp);
            if (g(tmp) >= 0)
                hi = mid;
            else
                lo = mid;
        }
        return hi;
    };

    for (int steps = 0;; ++steps)
    {
        if (steps > 500000)
            throw SolverError("geodesic integration did not terminate", inf);
        const auto [t0, t1] = stepper.do_step(sys);
        const double tend = std::min(t1, t_max);
        State<N> cur;
        if (tend < t1)
            stepper.calc_state(tend, cur);
        else
            cur = stepper.current_state();
        const double ge = gexit(cur), gs = stop(cur);
        double t_event = inf;
        int which = 0;
        if (ge_prev < 0 && ge >= 0)
        {
            t_event = bisect(t0, tend, gexit);
            which = 1;
        }
        if (gs_prev < 0 && gs >= 0)
        {
            const double te = bisect(t0, tend, stop);
            if (te < t_event)
            {
                t_event = te;
                which = 2;
            }
        }
        const double t_stop = which ? t_event : tend;
        while (next < times.size() && times[next] <= t_stop)
        {
            State<N> st;
            stepper.calc_state(times[next], st);
            obs(times[next], st);
            ++next;
        }
        if (which || tend >= t_max)
        {
            Traced<N> out;
            if (which)
                stepper.calc_state(t_stop, out.s);
            else
                out.s = cur;
            out.t = t_stop;
            out.exited = which == 1;
            out.stopped = which == 2;
            return out;
        }
        ge_prev = ge;
        gs_prev = gs;
    }
}

struct NoStop
{
    template <class S>
    double operator()(const S&) const
    {
        return -1.0;
    }
};

struct NoObs
{
    template <class S>
    void operator()(double, const S&) const
    {
    }
};

std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s)
    {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

class UnitSpeed final : public SpeedField
{
  public:
    Jet2 eval(Vec2) const override { return Jet2::constant(1.0); }
    nlohmann::json to_json() const override { return {{"expression", "1"}}; }
    bool is_radial() const override { return true; }
};

}  // namespace

//---------------------------------------------------------------------------//

struct ManifoldModel::Impl
{
    ModelKind kind = ModelKind::euclidean_disk;
    double radius = 1.0;
    double kappa = 0.0;
    double scale = 1.0;  // metric length multiplier
    bool shooting = false;
    double tol_rel = 1e-7;
    SpeedFieldPtr field;
    bool radial = true;

    double length = 0.0;
    // Non-radial boundary parametrization: cumulative arclength at uniform
    // coordinate angles.
    std::vector<double> arc_table;

    mutable std::once_flag diam_once;
    mutable double diam = 0.0;

    void init_boundary();
    Jet2 c(Vec2 p) const
    {
        Jet2 j = field->eval(p);
        if (scale != 1.0)
        {
            const double s = 1.0 / scale;
            j.v *= s;
            j.dx *= s;
            j.dy *= s;
            j.dxx *= s;
            j.dxy *= s;
            j.dyy *= s;
        }
        return j;
    }
    bool closed_form() const { return !shooting && kind != ModelKind::conformal_disk; }
    double size_proxy() const { return length / pi; }
    double solver_tol() const { return tol_rel * size_proxy(); }
    bool on_boundary(Vec2 p) const { return norm(p) >= radius * (1.0 - 1e-12); }

    double angle_of_param(double s) const;
    double param_of_angle(double phi) const;
    Vec2 boundary_point(double s) const
    {
        return unit_from_angle(angle_of_param(s)) * radius;
    }

    // Closed forms for constant curvature.
    double cc_distance(Vec2 p, Vec2 q) const;
    Vec2 cc_log(Vec2 x, Vec2 y) const;
    std::optional<Vec2> cc_exp(Vec2 x, Vec2 v) const;

    // Numerical rays.
    Traced<3> ray(Vec2 x, double theta, double t_max, Vec2 target, bool stop_at_closest,
                  bool stop_at_exit = true) const;
    struct Shot
    {
        double theta = 0.0;      // initial coordinate angle at the start
        double length = 0.0;     // metric length
        double end_theta = 0.0;  // coordinate angle on arrival
        double residual = 0.0;
    };
    Shot shoot(Vec2 p, Vec2 q) const;
    Shot shoot_to_boundary(Vec2 p, double phi_q) const;
    Shot shoot_interior(Vec2 p, Vec2 q) const;
    double distance(Vec2 p, Vec2 q) const;
    Vec2 log_map(Vec2 x, Vec2 y) const;
    std::optional<Vec2> exp_map(Vec2 x, Vec2 v) const;
    double radial_depth(Vec2 p) const;
    double diameter() const;
};

void ManifoldModel::Impl::init_boundary()
{
    radial = field->is_radial();
    if (radial)
    {
        length = two_pi * radius / c(Vec2(radius, 0.0)).v;
        return;
    }
    const int m = 4096;
    const double dphi = two_pi / m;
    arc_table.assign(m + 1, 0.0);
    for (int k = 0; k < m; ++k)
    {
        const double a = k * dphi;
        auto integrand = [&](double phi) { return radius / c(unit_from_angle(phi) * radius).v; };
        arc_table[k + 1] =
            arc_table[k] + boost::math::quadrature::gauss<double, 10>::integrate(integrand, a, a + dphi);
    }
    length = arc_table[m];
}

double ManifoldModel::Impl::angle_of_param(double s) const
{
    s = std::fmod(s, length);
    if (s < 0)
        s += length;
    if (radial)
        return two_pi * s / length;
    const int m = static_cast<int>(arc_table.size()) - 1;
    const double dphi = two_pi / m;
    auto it = std::upper_bound(arc_table.begin(), arc_table.end(), s);
    int k = std::clamp(static_cast<int>(it - arc_table.begin()) - 1, 0, m - 1);
    // Newton on s(phi) within the cell, ds/dphi = R / c.
    double phi = k * dphi + dphi * (s - arc_table[k]) / (arc_table[k + 1] - arc_table[k]);
    for (int it2 = 0; it2 < 4; ++it2)
    {
        auto integrand = [&](double t) { return radius / c(unit_from_angle(t) * radius).v; };
        const double sk = arc_table[k] +
                          boost::math::quadrature::gauss<double, 10>::integrate(integrand, k * dphi, phi);
        phi -= (sk - s) * c(unit_from_angle(phi) * radius).v / radius;
    }
    return phi;
}

double ManifoldModel::Impl::param_of_angle(double phi) const
{
    phi = wrap_0_2pi(phi);
    if (radial)
        return length * phi / two_pi;
    const int m = static_cast<int>(arc_table.size()) - 1;
    const double dphi = two_pi / m;
    const int k = std::clamp(static_cast<int>(phi / dphi), 0, m - 1);
    auto integrand = [&](double t) { return radius / c(unit_from_angle(t) * radius).v; };
    return arc_table[k] + boost::math::quadrature::gauss<double, 10>::integrate(integrand, k * dphi, phi);
}

//---------------------------------------------------------------------------//
// Constant curvature: isometries are Moebius maps of the scaled disk.

double ManifoldModel::Impl::cc_distance(Vec2 p, Vec2 q) const
{
    if (kind == ModelKind::euclidean_disk)
        return scale * norm(q - p);
    if (kappa == 0.0)
        return 2.0 * scale * norm(q - p);
    const double k = std::sqrt(std::abs(kappa));
    const double sg = kappa > 0 ? 1.0 : -1.0;
    const cplx a(k * p.x, k * p.y), b(k * q.x, k * q.y);
    const double m = std::abs((b - a) / (1.0 + sg * std::conj(a) * b));
    const double unit = sg < 0 ? 2.0 * std::atanh(std::min(m, 1.0)) : 2.0 * std::atan(m);
    return scale * unit / k;
}

Vec2 ManifoldModel::Impl::cc_log(Vec2 x, Vec2 y) const
{
    if (kind == ModelKind::euclidean_disk)
        return (y - x) * scale;
    if (kappa == 0.0)
        return (y - x) * (2.0 * scale);
    const double k = std::sqrt(std::abs(kappa));
    const double sg = kappa > 0 ? 1.0 : -1.0;
    const cplx a(k * x.x, k * x.y), b(k * y.x, k * y.y);
    const cplx w = (b - a) / (1.0 + sg * std::conj(a) * b);
    const double m = std::abs(w);
    if (m == 0.0)
        return {0.0, 0.0};
    const double unit = sg < 0 ? 2.0 * std::atanh(std::min(m, 1.0)) : 2.0 * std::atan(m);
    const double d = scale * unit / k;
    return Vec2(w.real(), w.imag()) * (d / m);
}

std::optional<Vec2> ManifoldModel::Impl::cc_exp(Vec2 x, Vec2 v) const
{
    Vec2 y;
    const double len = norm(v);
    if (kind == ModelKind::euclidean_disk)
        y = x + v / scale;
    else if (kappa == 0.0)
        y = x + v / (2.0 * scale);
    else if (len == 0.0)
        y = x;
    else
    {
        const double k = std::sqrt(std::abs(kappa));
        const double sg = kappa > 0 ? 1.0 : -1.0;
        const double half = 0.5 * k * len / scale;
        if (sg > 0 && half >= 0.5 * pi)
            return std::nullopt;
        const double m = sg < 0 ? std::tanh(half) : std::tan(half);
        const cplx w(v.x / len * m, v.y / len * m);
        const cplx a(k * x.x, k * x.y);
        const cplx b = (w + a) / (1.0 - sg * std::conj(a) * w);
        y = Vec2(b.real() / k, b.imag() / k);
    }
    if (norm(y) > radius * (1.0 + 1e-12))
        return std::nullopt;
    return y;
}

//---------------------------------------------------------------------------//
// Shooting.

Traced<3> ManifoldModel::Impl::ray(Vec2 x, double theta, double t_max, Vec2 target,
                                   bool stop_at_closest, bool stop_at_exit) const
{
    const double exit_radius = stop_at_exit ? radius : inf;
    auto rhs = [&](const State<3>& s, State<3>& ds) {
        const Jet2 cj = c(Vec2(s[0], s[1]));
        const double co = std::cos(s[2]), si = std::sin(s[2]);
        ds[0] = cj.v * co;
        ds[1] = cj.v * si;
        ds[2] = si * cj.dx - co * cj.dy;
    };
    const State<3> s0{x.x, x.y, theta};
    static const std::vector<double> none;
    const double dt0 = 1e-3 * size_proxy();
    if (stop_at_closest)
    {
        auto stop = [&](const State<3>& s) {
            return (s[0] - target.x) * std::cos(s[2]) + (s[1] - target.y) * std::sin(s[2]);
        };
        return trace<3>(rhs, s0, t_max, exit_radius, stop, none, NoObs{}, 1e-12, dt0);
    }
    return trace<3>(rhs, s0, t_max, exit_radius, NoStop{}, none, NoObs{}, 1e-12, dt0);
}

namespace {

// Expands a bracket around theta0 until f changes sign, keeping |f| below
// `limit` at both ends (avoids the wrap-around discontinuity).
template <class F>
bool bracket_root(const F& f, double theta0, double lo_lim, double hi_lim, double limit, double& a,
                  double& b, double& fa, double& fb)
{
    const double f0 = f(theta0);
    if (f0 == 0.0)
    {
        a = b = theta0;
        fa = fb = 0.0;
        return true;
    }
    double step = 1e-3;
    double prev = theta0, fprev = f0;
    // Walk in the direction that reduces |f|; try both if needed.
    for (int dir : {1, -1})
    {
        prev = theta0;
        fprev = f0;
        step = 1e-3;
        for (int it = 0; it < 60; ++it)
        {
            double next = prev + dir * step;
            next = std::clamp(next, lo_lim, hi_lim);
            if (next == prev)
                break;
            const double fn = f(next);
            if (std::abs(fn) < limit && std::signbit(fn) != std::signbit(fprev))
            {
                a = std::min(prev, next);
                b = std::max(prev, next);
                fa = a == prev ? fprev : fn;
                fb = b == prev ? fprev : fn;
                return true;
            }
            if (std::abs(fn) > std::abs(fprev) && it > 2)
                break;
            prev = next;
            fprev = fn;
            step *= 2.0;
        }
    }
    return false;
}

}  // namespace

ManifoldModel::Impl::Shot ManifoldModel::Impl::shoot_to_boundary(Vec2 p, double phi_q) const
{
    const bool from_boundary = on_boundary(p);
    const double t_max = 50.0 * size_proxy();
    const double phi_p = angle_of(p);
    const Vec2 q = unit_from_angle(phi_q) * radius;
    const double target_rel = wrap_0_2pi(phi_q - phi_p);

    auto run = [&](double theta) { return ray(p, theta, t_max, q, false); };
    auto f = [&](double theta) {
        const Traced<3> tr = run(theta);
        const double phi_e = std::atan2(tr.s[1], tr.s[0]);
        if (from_boundary)
            return wrap_0_2pi(phi_e - phi_p) - target_rel;
        return wrap_pm_pi(phi_e - phi_q);
    };

    double lo = -inf, hi = inf;
    if (from_boundary)
    {
        lo = phi_p + 0.5 * pi + 1e-9;
        hi = phi_p + 1.5 * pi - 1e-9;
    }
    double theta0 = angle_of(q - p);
    if (from_boundary)
    {
        while (theta0 < lo)
            theta0 += two_pi;
        while (theta0 > hi)
            theta0 -= two_pi;
        theta0 = std::clamp(theta0, lo, hi);
    }
    double a, b, fa, fb;
    if (!bracket_root(f, theta0, lo, hi, from_boundary ? inf : 0.5 * pi, a, b, fa, fb))
        throw SolverError("shooting: no bracket for boundary target", inf);
    double theta = a;
    if (a != b)
    {
        boost::uintmax_t iters = 100;
        const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb,
                                                         boost::math::tools::eps_tolerance<double>(50), iters);
        theta = 0.5 * (r.first + r.second);
    }
    const Traced<3> tr = run(theta);
    Shot out;
    out.theta = theta;
    out.length = tr.t;
    out.end_theta = tr.s[2];
    const Vec2 e(tr.s[0], tr.s[1]);
    out.residual = norm(e - q) / c(q).v;
    if (!tr.exited || out.residual > solver_tol())
        throw SolverError("shooting: boundary target not reached", out.residual);
    return out;
}

ManifoldModel::Impl::Shot ManifoldModel::Impl::shoot_interior(Vec2 p, Vec2 q) const
{
    const double t_max = 50.0 * size_proxy();
    auto run = [&](double theta) { return ray(p, theta, t_max, q, true); };
    auto f = [&](double theta) {
        const Traced<3> tr = run(theta);
        const Vec2 z(tr.s[0], tr.s[1]);
        const Vec2 u = unit_from_angle(tr.s[2]);
        return cross(u, q - z);
    };
    double lo = -inf, hi = inf;
    if (on_boundary(p))
    {
        const double phi_p = angle_of(p);
        lo = phi_p + 0.5 * pi + 1e-9;
        hi = phi_p + 1.5 * pi - 1e-9;
    }
    double theta0 = angle_of(q - p);
    if (std::isfinite(lo))
    {
        while (theta0 < lo)
            theta0 += two_pi;
        while (theta0 > hi)
            theta0 -= two_pi;
        theta0 = std::clamp(theta0, lo, hi);
    }
    double a, b, fa, fb;
    if (!bracket_root(f, theta0, lo, hi, inf, a, b, fa, fb))
        throw SolverError("shooting: no bracket for interior target", inf);
    double theta = a;
    if (a != b)
    {
        boost::uintmax_t iters = 100;
        const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb,
                                                         boost::math::tools::eps_tolerance<double>(50), iters);
        theta = 0.5 * (r.first + r.second);
    }
    const Traced<3> tr = run(theta);
    Shot out;
    out.theta = theta;
    out.length = tr.t;
    out.end_theta = tr.s[2];
    const Vec2 z(tr.s[0], tr.s[1]);
    out.residual = norm(z - q) / c(q).v;
    if (!tr.stopped || out.residual > solver_tol())
        throw SolverError("shooting: interior target not reached", out.residual);
    return out;
}

ManifoldModel::Impl::Shot ManifoldModel::Impl::shoot(Vec2 p, Vec2 q) const
{
    if (on_boundary(q))
        return shoot_to_boundary(p, angle_of(q));
    return shoot_interior(p, q);
}

double ManifoldModel::Impl::distance(Vec2 p, Vec2 q) const
{
    if (p == q)
        return 0.0;
    if (closed_form())
        return cc_distance(p, q);
    // Shoot from an interior point when possible: its angle range is free.
    if (on_boundary(p) && !on_boundary(q))
        std::swap(p, q);
    return shoot(p, q).length;
}

Vec2 ManifoldModel::Impl::log_map(Vec2 x, Vec2 y) const
{
    if (x == y)
        return {0.0, 0.0};
    if (closed_form())
        return cc_log(x, y);
    if (on_boundary(x) && !on_boundary(y))
    {
        const Shot s = shoot(y, x);
        return unit_from_angle(s.end_theta + pi) * s.length;
    }
    const Shot s = shoot(x, y);
    return unit_from_angle(s.theta) * s.length;
}

std::optional<Vec2> ManifoldModel::Impl::exp_map(Vec2 x, Vec2 v) const
{
    if (closed_form())
        return cc_exp(x, v);
    const double len = norm(v);
    if (len == 0.0)
        return x;
    const Traced<3> tr = ray(x, angle_of(v), len, Vec2(), false);
    if (tr.exited && tr.t < len * (1.0 - 1e-12))
        return std::nullopt;
    return Vec2(tr.s[0], tr.s[1]);
}

double ManifoldModel::Impl::radial_depth(Vec2 p) const
{
    // Metric length of the coordinate-radial segment from p to the boundary.
    const double r = norm(p);
    const Vec2 dir = r > 0 ? p / r : Vec2(1.0, 0.0);
    auto integrand = [&](double t) { return 1.0 / c(dir * t).v; };
    return boost::math::quadrature::gauss<double, 20>::integrate(integrand, r, radius);
}

double ManifoldModel::Impl::diameter() const
{
    std::call_once(diam_once, [&] {
        if (kind == ModelKind::euclidean_disk)
            diam = 2.0 * radius * scale;
        else if (kind == ModelKind::curved_disk)
            diam = 2.0 * cc_distance(Vec2(), Vec2(radius, 0.0));
        else
        {
            const int m = 16;
            std::vector<Vec2> pts(m);
            for (int i = 0; i < m; ++i)
                pts[i] = boundary_point(length * i / m);
            double best = 0.0;
            for (int i = 0; i < m; ++i)
                for (int j = i + 1; j < m; ++j)
                    best = std::max(best, distance(pts[i], pts[j]));
            diam = best;
        }
    });
    return diam;
}

//---------------------------------------------------------------------------//

namespace {

std::shared_ptr<ManifoldModel::Impl> make_impl(ModelKind kind, double radius, double kappa,
                                               SpeedFieldPtr field, double scale)
{
    require(std::isfinite(radius) && radius > 0, ErrorCode::constraint, "manifold: radius must be > 0");
    require(std::isfinite(scale) && scale > 0, ErrorCode::constraint, "manifold: length_scale must be > 0");
    auto impl = std::make_shared<ManifoldModel::Impl>();
    impl->kind = kind;
    impl->radius = radius;
    impl->kappa = kappa;
    impl->scale = scale;
    impl->field = std::move(field);
    // Positivity of c on a polar sample of the closed disk.
    for (int i = 0; i <= 16; ++i)
        for (int k = 0; k < 64; ++k)
        {
            const Vec2 p = unit_from_angle(two_pi * k / 64) * (radius * i / 16.0);
            const double v = impl->field->eval(p).v;
            if (!(std::isfinite(v) && v > 0))
                fail(ErrorCode::constraint, "manifold: conformal speed must be finite and > 0 on the disk");
        }
    impl->init_boundary();
    return impl;
}

}  // namespace

ManifoldModel ManifoldModel::euclidean_disk(double radius)
{
    return ManifoldModel(make_impl(ModelKind::euclidean_disk, radius, 0.0, std::make_shared<UnitSpeed>(), 1.0));
}

ManifoldModel ManifoldModel::curved_disk(double kappa, double radius)
{
    require(std::isfinite(kappa), ErrorCode::constraint, "manifold: kappa must be finite");
    require(kappa * radius * radius < 1.0, ErrorCode::constraint,
            "manifold: curved-disk needs kappa * radius^2 < 1 for a convex boundary");
    require(kappa * radius * radius > -1.0, ErrorCode::constraint,
            "manifold: curved-disk needs kappa * radius^2 > -1 (disk inside the model)");
    return ManifoldModel(
        make_impl(ModelKind::curved_disk, radius, kappa, make_constant_curvature_speed(kappa), 1.0));
}

ManifoldModel ManifoldModel::conformal_disk(SpeedFieldPtr speed, double radius)
{
    require(speed != nullptr, ErrorCode::invalid_argument, "manifold: missing conformal speed");
    return ManifoldModel(make_impl(ModelKind::conformal_disk, radius, 0.0, std::move(speed), 1.0));
}

ManifoldModel ManifoldModel::from_json(const nlohmann::json& j)
{
    if (!j.is_object())
        fail(ErrorCode::parse, "manifold config: expected a JSON object");
    auto num = [&](const char* key) -> double {
        if (!j.contains(key))
            fail(ErrorCode::parse, std::string("manifold config: missing field '") + key + "'");
        if (!j[key].is_number())
            fail(ErrorCode::parse, std::string("manifold config: field '") + key + "' must be a number");
        return j[key].get<double>();
    };
    if (!j.contains("kind") || !j["kind"].is_string())
        fail(ErrorCode::parse, "manifold config: field 'kind' must be a string");
    const std::string kind = j["kind"].get<std::string>();
    const double radius = num("radius");
    const double scale = j.contains("length_scale") ? num("length_scale") : 1.0;
    ManifoldModel m = [&] {
        if (kind == "euclidean-disk")
            return euclidean_disk(radius);
        if (kind == "curved-disk")
            return curved_disk(num("kappa"), radius);
        if (kind == "conformal-disk")
        {
            if (!j.contains("conformal"))
                fail(ErrorCode::parse, "manifold config: conformal-disk needs field 'conformal'");
            return conformal_disk(speed_from_json(j["conformal"]), radius);
        }
        fail(ErrorCode::parse, "manifold config: field 'kind' must be euclidean-disk, curved-disk or "
                               "conformal-disk, got '" + kind + "'");
    }();
    if (scale != 1.0)
        m = m.scaled(scale);
    return m;
}

nlohmann::json ManifoldModel::to_json() const
{
    nlohmann::json j;
    j["kind"] = to_string(impl_->kind);
    j["radius"] = impl_->radius;
    if (impl_->kind == ModelKind::curved_disk)
        j["kappa"] = impl_->kappa;
    if (impl_->kind == ModelKind::conformal_disk)
        j["conformal"] = impl_->field->to_json();
    if (impl_->scale != 1.0)
        j["length_scale"] = impl_->scale;
    return j;
}

std::uint64_t ManifoldModel::hash() const { return fnv1a(to_json().dump()); }

std::string ManifoldModel::hash_hex() const
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return buf;
}

std::string to_string(ModelKind k)
{
    switch (k)
    {
        case ModelKind::euclidean_disk: return "euclidean-disk";
        case ModelKind::curved_disk: return "curved-disk";
        case ModelKind::conformal_disk: return "conformal-disk";
    }
    return "unknown";
}

ModelKind ManifoldModel::kind() const { return impl_->kind; }
double ManifoldModel::radius() const { return impl_->radius; }
double ManifoldModel::kappa() const { return impl_->kappa; }

namespace {

std::shared_ptr<ManifoldModel::Impl> clone(const ManifoldModel::Impl& src)
{
    auto impl = std::make_shared<ManifoldModel::Impl>();
    impl->kind = src.kind;
    impl->radius = src.radius;
    impl->kappa = src.kappa;
    impl->scale = src.scale;
    impl->shooting = src.shooting;
    impl->tol_rel = src.tol_rel;
    impl->field = src.field;
    impl->radial = src.radial;
    impl->length = src.length;
    impl->arc_table = src.arc_table;
    return impl;
}

}  // namespace

ManifoldModel ManifoldModel::scaled(double f) const
{
    require(std::isfinite(f) && f > 0, ErrorCode::invalid_argument, "scale factor must be > 0");
    auto impl = clone(*impl_);
    impl->scale *= f;
    impl->length *= f;
    for (double& s : impl->arc_table)
        s *= f;
    return ManifoldModel(impl);
}

ManifoldModel ManifoldModel::with_shooting() const
{
    auto impl = clone(*impl_);
    impl->shooting = true;
    return ManifoldModel(impl);
}

ManifoldModel ManifoldModel::with_tolerance(double tol_dist_rel) const
{
    require(tol_dist_rel > 0, ErrorCode::invalid_argument, "tol_dist_rel must be > 0");
    auto impl = clone(*impl_);
    impl->tol_rel = tol_dist_rel;
    return ManifoldModel(impl);
}

Jet2 ManifoldModel::speed(Vec2 p) const { return impl_->c(p); }

double ManifoldModel::gauss_curvature(Vec2 p) const
{
    const Jet2 c = impl_->c(p);
    return c.v * (c.dxx + c.dyy) - (c.dx * c.dx + c.dy * c.dy);
}

bool ManifoldModel::contains(Vec2 p) const { return norm(p) <= impl_->radius * (1.0 + 1e-12); }

double ManifoldModel::boundary_length() const { return impl_->length; }
double ManifoldModel::diameter() const { return impl_->diameter(); }
double ManifoldModel::tol_dist() const { return impl_->tol_rel * diameter(); }

Vec2 ManifoldModel::boundary_point(double s) const { return impl_->boundary_point(s); }

double ManifoldModel::boundary_param(Vec2 on_boundary) const
{
    return impl_->param_of_angle(angle_of(on_boundary));
}

BoundaryGrid ManifoldModel::grid(std::int64_t n) const { return BoundaryGrid(n, impl_->length); }

std::vector<Vec2> ManifoldModel::boundary_nodes(const BoundaryGrid& grid) const
{
    std::vector<Vec2> out(static_cast<std::size_t>(grid.size()));
    for (std::int64_t i = 0; i < grid.size(); ++i)
        out[static_cast<std::size_t>(i)] = boundary_point(grid.param(i));
    return out;
}

double ManifoldModel::distance(Vec2 p, Vec2 q) const { return impl_->distance(p, q); }
TangentVector ManifoldModel::log_map(Vec2 x, Vec2 y) const { return impl_->log_map(x, y); }
std::optional<Vec2> ManifoldModel::exp_map(Vec2 x, TangentVector v) const { return impl_->exp_map(x, v); }

Vec2 ManifoldModel::geodesic_point(Vec2 x, Vec2 y, double t) const
{
    const Vec2 v = log_map(x, y);
    const double len = norm(v);
    if (len == 0.0)
        return x;
    const double tt = std::clamp(t, 0.0, len);
    if (tt == len)
        return y;
    auto p = exp_map(x, v * (tt / len));
    if (!p)
        throw SolverError("geodesic_point: geodesic left the disk", t);
    return *p;
}

double ManifoldModel::nearest_boundary_param(Vec2 p) const
{
    const auto& m = *impl_;
    if (m.radial || m.closed_form())
        return m.param_of_angle(norm(p) > 0 ? angle_of(p) : 0.0);
    const int n = 64;
    double best = inf;
    int best_k = 0;
    for (int k = 0; k < n; ++k)
    {
        const double d = distance(p, boundary_point(m.length * k / n));
        if (d < best)
        {
            best = d;
            best_k = k;
        }
    }
    const double h = m.length / n;
    auto f = [&](double s) { return distance(p, boundary_point(s)); };
    const auto r = boost::math::tools::brent_find_minima(f, (best_k - 1) * h, (best_k + 1) * h, 40);
    double s = std::fmod(r.first, m.length);
    return s < 0 ? s + m.length : s;
}

double ManifoldModel::distance_to_boundary(Vec2 p) const
{
    const auto& m = *impl_;
    if (m.kind == ModelKind::euclidean_disk)
        return m.scale * (m.radius - norm(p));
    if (m.radial)
        return m.closed_form() ? distance(p, unit_from_angle(norm(p) > 0 ? angle_of(p) : 0.0) * m.radius)
                               : m.radial_depth(p);
    return distance(p, boundary_point(nearest_boundary_param(p)));
}

std::vector<double> ManifoldModel::boundary_distance_function(Vec2 p, const BoundaryGrid& grid) const
{
    require(contains(p), ErrorCode::invalid_argument, "boundary_distance_function: point outside the disk");
    std::vector<double> out(static_cast<std::size_t>(grid.size()));
    const auto nodes = boundary_nodes(grid);
    if (impl_->closed_form())
    {
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = distance(p, nodes[i]);
        return out;
    }
    parallel_for(out.size(), [&](std::size_t i) { out[i] = distance(p, nodes[i]); });
    return out;
}

double ManifoldModel::second_fundamental_form(double s) const
{
    const auto& m = *impl_;
    const Vec2 b = boundary_point(s);
    const double phi = angle_of(b);
    // Curvature of the boundary relative to the geodesic tangent to it: the
    // tangent geodesic (continued through the extended metric) leaves the
    // disk by k t^2 / 2 at time t. Both directions are averaged and two step
    // sizes combined to cancel odd and t^2 terms.
    auto depth_after = [&](double t, double dir) {
        const double theta = phi + dir * 0.5 * pi;
        const Traced<3> tr = m.ray(b, theta, t, Vec2(), false, false);
        return -m.radial_depth(Vec2(tr.s[0], tr.s[1]));
    };
    auto estimate = [&](double t) {
        const double d = 0.5 * (depth_after(t, 1.0) + depth_after(t, -1.0));
        return 2.0 * d / (t * t);
    };
    const double t = 0.02 * m.length / two_pi;
    const double k1 = estimate(t), k2 = estimate(0.5 * t);
    return (4.0 * k2 - k1) / 3.0;
}

JacobiTrace ManifoldModel::jacobi_field(Vec2 x, double theta, double t_max, int samples) const
{
    require(samples >= 2, ErrorCode::invalid_argument, "jacobi_field: need at least 2 samples");
    const auto& m = *impl_;
    auto rhs = [&](const State<5>& s, State<5>& ds) {
        const Jet2 cj = m.c(Vec2(s[0], s[1]));
        const double co = std::cos(s[2]), si = std::sin(s[2]);
        const double k = cj.v * (cj.dxx + cj.dyy) - (cj.dx * cj.dx + cj.dy * cj.dy);
        ds[0] = cj.v * co;
        ds[1] = cj.v * si;
        ds[2] = si * cj.dx - co * cj.dy;
        ds[3] = s[4];
        ds[4] = -k * s[3];
    };
    std::vector<double> times(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i)
        times[i] = t_max * (i + 1) / samples;
    JacobiTrace out;
    auto obs = [&](double t, const State<5>& s) {
        out.t.push_back(t);
        out.j.push_back(s[3]);
        out.dj.push_back(s[4]);
    };
    trace<5>(rhs, State<5>{x.x, x.y, theta, 0.0, 1.0}, t_max, m.radius, NoStop{}, times, obs, 1e-12,
             1e-3 * m.size_proxy());
    return out;
}

SimplicityReport ManifoldModel::check_simplicity(int boundary_samples, int fan_size) const
{
    require(boundary_samples >= 4 && fan_size >= 4, ErrorCode::invalid_argument,
            "check_simplicity: sample counts too small");
    const auto& m = *impl_;
    SimplicityReport rep;
    rep.min_boundary_curvature = inf;
    std::vector<double> curv(static_cast<std::size_t>(boundary_samples));
    std::vector<char> monotone(static_cast<std::size_t>(boundary_samples), 1);
    parallel_for(curv.size(), [&](std::size_t i) {
        const double s = m.length * static_cast<double>(i) / boundary_samples;
        curv[i] = second_fundamental_form(s);
        const Vec2 b = boundary_point(s);
        const double phi = angle_of(b);
        double prev = -1.0;
        for (int k = 1; k < fan_size; ++k)
        {
            const double theta = phi + 0.5 * pi + pi * k / fan_size;
            const Traced<3> tr = m.ray(b, theta, 50.0 * m.size_proxy(), Vec2(), false);
            const double rel = wrap_0_2pi(std::atan2(tr.s[1], tr.s[0]) - phi);
            if (!tr.exited || rel <= prev)
                monotone[i] = 0;
            prev = rel;
        }
    });
    for (std::size_t i = 0; i < curv.size(); ++i)
    {
        rep.min_boundary_curvature = std::min(rep.min_boundary_curvature, curv[i]);
        rep.no_fold = rep.no_fold && monotone[i];
    }
    rep.convex = rep.min_boundary_curvature > 0;

    // log(exp(v)) round trips from a few interior points.
    double worst = 0.0;
    for (int i = 0; i < 4; ++i)
    {
        const Vec2 x = unit_from_angle(1.3 * i) * (0.4 * m.radius * i / 3.0);
        const double reach = distance_to_boundary(x);
        for (int k = 0; k < 6; ++k)
        {
            const Vec2 v = unit_from_angle(two_pi * k / 6 + 0.1) * (0.6 * reach);
            auto y = exp_map(x, v);
            if (!y)
                continue;
            worst = std::max(worst, norm(log_map(x, *y) - v));
        }
    }
    rep.max_roundtrip_error = worst;
    return rep;
}

}  // namespace lentil
