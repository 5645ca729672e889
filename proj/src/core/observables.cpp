#include "lentil/observables.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "lentil/error.hpp"
#include "lentil/io.hpp"
#include "lentil/parallel.hpp"

namespace lentil {

namespace {

double at(const std::vector<double>& v, std::int64_t i)
{
    const auto n = static_cast<std::int64_t>(v.size());
    return v[static_cast<std::size_t>(((i % n) + n) % n)];
}

// Parabola through the three nodes around the nearest node, evaluated at g.
// At a refined extremum this is the interpolated peak value.
double parabola_at(const std::vector<double>& f, GridParam g)
{
    std::int64_t c = g.node;
    double t = g.frac;
    if (t >= 0.5)
    {
        ++c;
        t -= 1.0;
    }
    const double fm = at(f, c - 1), f0 = at(f, c), fp = at(f, c + 1);
    return f0 + 0.5 * t * (fp - fm) + 0.5 * t * t * (fp - 2 * f0 + fm);
}

struct Extremum
{
    GridParam where;
    double curvature = 0.0;  // second derivative in arclength
};

Extremum refine(const std::vector<double>& d, const BoundaryGrid& grid, std::int64_t k)
{
    const double fm = at(d, k - 1), f0 = at(d, k), fp = at(d, k + 1);
    const double den = fm - 2 * f0 + fp;
    double off = den != 0 ? 0.5 * (fm - fp) / den : 0.0;
    off = std::clamp(off, -0.5, 0.5);
    Extremum e;
    e.where = grid.normalize(k, off);
    e.curvature = den / (grid.spacing() * grid.spacing());
    return e;
}

std::vector<double> difference(const std::vector<double>& a, const std::vector<double>& b)
{
    require(a.size() == b.size() && !a.empty(), ErrorCode::invalid_argument,
            "arrival functions must share one boundary grid");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        d[i] = a[i] - b[i];
    return d;
}

}  // namespace

double obs_tol(const BoundaryGrid& grid, const Tolerances& tol)
{
    return tol.obs_tol_grid * grid.spacing();
}

EndpointPair conjoined_endpoints(const std::vector<double>& a_r, const std::vector<double>& a_s,
                                 const BoundaryGrid& grid, double tol)
{
    const auto d = difference(a_r, a_s);
    require(static_cast<std::int64_t>(d.size()) == grid.size(), ErrorCode::invalid_argument,
            "conjoined_endpoints: function length differs from the grid size");
    const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
    // The differentials of a_r and a_s agree where D = a_r - a_s is critical;
    // its global extremes are the ends of the geodesic through both sources.
    // Only coincident sources are degenerate; distinct ones a grid step apart
    // still give a clean extremum pair. The threshold sits near the dedupe
    // oscillation threshold.
    if (*hi - *lo <= 1e-3 * tol)
        fail(ErrorCode::degenerate, "conjoined_endpoints: a_r - a_s is constant (same spatial point)");
    const auto kmin = static_cast<std::int64_t>(lo - d.begin());
    const auto kmax = static_cast<std::int64_t>(hi - d.begin());
    if (grid.arc_distance(kmin, kmax) <= 2 * grid.spacing())
        fail(ErrorCode::degenerate, "conjoined_endpoints: the two critical points are not separated");
    const Extremum x = refine(d, grid, kmin), y = refine(d, grid, kmax);
    EndpointPair e;
    e.x = x.where;
    e.y = y.where;
    const double c = std::min(std::abs(x.curvature), std::abs(y.curvature));
    e.condition = c > 0 ? 1.0 / c : std::numeric_limits<double>::infinity();
    return e;
}

double pairwise_distance(const std::vector<double>& a_r, const std::vector<double>& a_s, const EndpointPair& e,
                         const BoundaryGrid&)
{
    // f_rr(x,y) - f_ss(x,y) = D(x) - D(y) = -+ 2 d(p_r, p_s).
    const auto d = difference(a_r, a_s);
    return 0.5 * std::abs(parabola_at(d, e.x) - parabola_at(d, e.y));
}

std::vector<double> distance_difference_function(const std::vector<double>& a_r, const std::vector<double>& a_s,
                                                 EndpointPair& e, const BoundaryGrid& grid, double tol,
                                                 double* orientation_residual)
{
    const auto d = difference(a_r, a_s);
    const double dist = pairwise_distance(a_r, a_s, e, grid);
    auto build = [&](GridParam y, double& residual) {
        std::vector<double> f(d.size());
        const double dy = parabola_at(d, y);
        residual = 0.0;
        for (std::size_t k = 0; k < d.size(); ++k)
        {
            f[k] = d[k] - dy + dist;
            residual = std::max(residual, std::abs(f[k]) - dist);
        }
        return f;
    };
    // |f^{rs}| <= d(p_r, p_s) by the triangle inequality; the wrong choice of
    // y violates it by up to 2 d.
    double ra = 0, rb = 0;
    auto fa = build(e.y, ra);
    auto fb = build(e.x, rb);
    if (ra > tol && rb > tol)
        fail(ErrorCode::constraint, "distance_difference_function: orientation test inconclusive (residuals " +
                                        std::to_string(ra) + ", " + std::to_string(rb) + ")");
    if (orientation_residual)
        *orientation_residual = std::min(ra, rb);
    if (rb < ra)
    {
        std::swap(e.x, e.y);
        return fb;
    }
    return fa;
}

double time_difference(const std::vector<double>& a_r, const std::vector<double>& a_s, const std::vector<double>& f_rs,
                       double tol, double* spread)
{
    const auto d = difference(a_r, a_s);
    require(f_rs.size() == d.size(), ErrorCode::invalid_argument, "time_difference: size mismatch");
    std::vector<double> t(d.size());
    for (std::size_t k = 0; k < d.size(); ++k)
        t[k] = d[k] - f_rs[k];  // f_rs(z,z) - f^{rs}(z)
    const auto [lo, hi] = std::minmax_element(t.begin(), t.end());
    const double sp = *hi - *lo;
    if (spread)
        *spread = sp;
    if (sp > 10 * tol)
        fail(ErrorCode::constraint, "time_difference: spread " + std::to_string(sp) + " exceeds 10 obs_tol");
    auto mid = t.begin() + static_cast<std::ptrdiff_t>(t.size() / 2);
    std::nth_element(t.begin(), mid, t.end());
    return *mid;
}

PairObservables observe_pair(const std::vector<double>& a_r, const std::vector<double>& a_s,
                             const BoundaryGrid& grid, double tol)
{
    PairObservables p;
    p.endpoints = conjoined_endpoints(a_r, a_s, grid, tol);
    const auto f = distance_difference_function(a_r, a_s, p.endpoints, grid, tol, &p.orientation_residual);
    p.distance = pairwise_distance(a_r, a_s, p.endpoints, grid);
    p.time_diff = time_difference(a_r, a_s, f, tol, &p.spread);
    return p;
}

DiscreteSpace DiscreteSpace::assemble(const std::vector<ArrivalFunction>& functions, const CloudHeader& header,
                                      const Tolerances& tol)
{
    DiscreteSpace sp;
    sp.n_ = functions.size();
    sp.header_ = header;
    sp.functions_ = functions;
    const BoundaryGrid grid = header.grid();
    sp.obs_tol_ = obs_tol(grid, tol);
    for (const auto& f : functions)
        require(static_cast<std::int64_t>(f.values.size()) == grid.size(), ErrorCode::invalid_argument,
                "assemble: arrival function length differs from the grid size");
    const std::size_t n = sp.n_;
    sp.dist_.assign(n * n, 0.0);
    sp.tdiff_.assign(n * n, 0.0);
    sp.ends_.assign(n * n, EndpointPair{});

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t s = r + 1; s < n; ++s)
            pairs.emplace_back(r, s);
    std::vector<std::optional<std::string>> errors(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t i) {
        const auto [r, s] = pairs[i];
        try
        {
            const auto p = observe_pair(functions[r].values, functions[s].values, grid, sp.obs_tol_);
            sp.dist_[r * n + s] = sp.dist_[s * n + r] = p.distance;
            sp.tdiff_[r * n + s] = p.time_diff;
            sp.tdiff_[s * n + r] = -p.time_diff;
            sp.ends_[r * n + s] = p.endpoints;
        }
        catch (const Error& e)
        {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < pairs.size(); ++i)
        if (errors[i])
            fail(ErrorCode::constraint, "assemble: pair (" + std::to_string(pairs[i].first) + ", " +
                                            std::to_string(pairs[i].second) + "): " + *errors[i]);

    const double t3 = 3 * sp.obs_tol_;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t c = 0; c < n; ++c)
            {
                if (sp.dist(a, c) > sp.dist(a, b) + sp.dist(b, c) + t3)
                    fail(ErrorCode::constraint, "assemble: triangle inequality violated by (" + std::to_string(a) +
                                                    ", " + std::to_string(b) + ", " + std::to_string(c) + ")");
                if (std::abs(sp.time_diff(a, b) + sp.time_diff(b, c) - sp.time_diff(a, c)) > sp.obs_tol_)
                    fail(ErrorCode::constraint, "assemble: time differences not additive over (" +
                                                    std::to_string(a) + ", " + std::to_string(b) + ", " +
                                                    std::to_string(c) + ")");
            }
    return sp;
}

EndpointPair DiscreteSpace::endpoints(std::size_t r, std::size_t s) const
{
    require(r < n_ && s < n_ && r != s, ErrorCode::invalid_argument, "endpoints: need two distinct indices");
    if (r < s)
        return ends_[tri(r, s)];
    EndpointPair e = ends_[tri(s, r)];
    std::swap(e.x, e.y);
    return e;
}

std::vector<double> DiscreteSpace::dd_function(std::size_t r, std::size_t s) const
{
    require(r < n_ && s < n_, ErrorCode::invalid_argument, "dd_function: index out of range");
    const auto grid = header_.grid();
    if (r == s)
        return std::vector<double>(static_cast<std::size_t>(grid.size()), 0.0);
    EndpointPair e = endpoints(r, s);
    return distance_difference_function(functions_[r].values, functions_[s].values, e, grid, obs_tol_);
}

double DiscreteSpace::max_condition() const
{
    double c = 0;
    for (std::size_t r = 0; r < n_; ++r)
        for (std::size_t s = r + 1; s < n_; ++s)
            c = std::max(c, ends_[tri(r, s)].condition);
    return c;
}

nlohmann::json DiscreteSpace::to_json() const
{
    using nlohmann::json;
    json j;
    j["n"] = n_;
    j["obs_tol"] = obs_tol_;
    j["header"] = header_.to_json();
    json d = json::array(), t = json::array();
    for (std::size_t r = 0; r < n_; ++r)
    {
        d.push_back(std::vector<double>(dist_.begin() + static_cast<std::ptrdiff_t>(r * n_),
                                        dist_.begin() + static_cast<std::ptrdiff_t>((r + 1) * n_)));
        t.push_back(std::vector<double>(tdiff_.begin() + static_cast<std::ptrdiff_t>(r * n_),
                                        tdiff_.begin() + static_cast<std::ptrdiff_t>((r + 1) * n_)));
    }
    j["dist"] = d;
    j["time_diffs"] = t;
    json e = json::array();
    for (std::size_t r = 0; r < n_; ++r)
        for (std::size_t s = r + 1; s < n_; ++s)
        {
            const auto& p = ends_[tri(r, s)];
            e.push_back({{"r", r},
                         {"s", s},
                         {"x", {p.x.node, p.x.frac}},
                         {"y", {p.y.node, p.y.frac}},
                         {"condition", p.condition}});
        }
    j["endpoints"] = e;
    j["max_condition"] = max_condition();
    json f = json::array();
    for (const auto& a : functions_)
        f.push_back(a.values);
    j["functions"] = f;
    return j;
}

DiscreteSpace DiscreteSpace::from_json(const nlohmann::json& j)
{
    DiscreteSpace sp;
    try
    {
        sp.n_ = j.at("n").get<std::size_t>();
        sp.obs_tol_ = j.at("obs_tol").get<double>();
        sp.header_ = CloudHeader::from_json(j.at("header"));
        const auto& d = j.at("dist");
        const auto& t = j.at("time_diffs");
        require(d.size() == sp.n_ && t.size() == sp.n_, ErrorCode::constraint, "space: matrices must be n x n");
        for (std::size_t r = 0; r < sp.n_; ++r)
        {
            const auto dr = d[r].get<std::vector<double>>();
            const auto tr = t[r].get<std::vector<double>>();
            require(dr.size() == sp.n_ && tr.size() == sp.n_, ErrorCode::constraint,
                    "space: row " + std::to_string(r) + " must have n entries");
            sp.dist_.insert(sp.dist_.end(), dr.begin(), dr.end());
            sp.tdiff_.insert(sp.tdiff_.end(), tr.begin(), tr.end());
        }
        sp.ends_.assign(sp.n_ * sp.n_, EndpointPair{});
        for (const auto& e : j.at("endpoints"))
        {
            const auto r = e.at("r").get<std::size_t>(), s = e.at("s").get<std::size_t>();
            require(r < s && s < sp.n_, ErrorCode::constraint, "space: endpoint indices out of range");
            EndpointPair p;
            p.x = {e.at("x")[0].get<std::int64_t>(), e.at("x")[1].get<double>()};
            p.y = {e.at("y")[0].get<std::int64_t>(), e.at("y")[1].get<double>()};
            p.condition = e.at("condition").get<double>();
            sp.ends_[r * sp.n_ + s] = p;
        }
        for (const auto& f : j.at("functions"))
        {
            ArrivalFunction a;
            a.values = f.get<std::vector<double>>();
            a.source_tag = static_cast<std::int64_t>(sp.functions_.size());
            require(static_cast<std::int64_t>(a.values.size()) == sp.header_.grid_size, ErrorCode::constraint,
                    "space: functions must have grid_size values");
            sp.functions_.push_back(std::move(a));
        }
        require(sp.functions_.size() == sp.n_, ErrorCode::constraint, "space: need one function per point");
    }
    catch (const nlohmann::json::exception& e)
    {
        fail(ErrorCode::parse, std::string("space: ") + e.what());
    }
    return sp;
}

void DiscreteSpace::write_dd_csv(const std::string& path,
                                 const std::vector<std::pair<std::size_t, std::size_t>>& pairs) const
{
    const auto grid = header_.grid();
    std::vector<std::string> cols = {"boundary_param"};
    std::vector<std::vector<double>> fs;
    for (const auto& [r, s] : pairs)
    {
        cols.push_back("f_" + std::to_string(r) + "_" + std::to_string(s));
        fs.push_back(dd_function(r, s));
    }
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(grid.size()));
    for (std::int64_t k = 0; k < grid.size(); ++k)
    {
        auto& row = rows[static_cast<std::size_t>(k)];
        row.push_back(grid.param(k));
        for (const auto& f : fs)
            row.push_back(f[static_cast<std::size_t>(k)]);
    }
    write_csv(path, cols, rows);
}

}  // namespace lentil
