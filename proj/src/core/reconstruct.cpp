#include "lentil/reconstruct.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>

#include "lentil/error.hpp"
#include "lentil/parallel.hpp"

namespace lentil {

namespace {

nlohmann::json ext_json(ExtLength e)
{
    if (e.is_finite())
        return e.value();
    return "infinity";
}

}  // namespace

ExtLength proximity_e(double lambda, const GeometryConstants& gc)
{
    if (!(lambda > gc.base.sff))
        return ExtLength::infinity();
    return ExtLength(gc.base.jf / (lambda - gc.base.sff));
}

ProximityData proximity(const DiscreteSpace& space, const GeometryConstants& gc, const Tolerances& tol)
{
    ProximityData p;
    p.grid = space.grid();
    const auto& fs = space.functions();
    const std::size_t n = fs.size();
    p.critical.assign(n, {});
    p.min_e.assign(n, ExtLength::infinity());

    parallel_for(n, [&](std::size_t i) {
        std::vector<CriticalPoint> cps;
        try
        {
            cps = critical_points(fs[i].values, p.grid);
        }
        catch (const Error& e)
        {
            // A flat arrival function is critical everywhere with zero
            // Hessian, so every E(p,y) is infinite.
            if (e.code() != ErrorCode::degenerate)
                throw;
            return;
        }
        auto& out = p.critical[i];
        for (const auto& cp : cps)
        {
            CriticalEstimate c;
            c.where = cp.where;
            c.kind = cp.kind;
            const auto h = boundary_hessian(fs[i].values, p.grid, cp.where, tol.h_hess_nodes, tol.richardson);
            c.lambda = h.value;
            c.lambda_error = h.error;
            c.e = proximity_e(h.value, gc);
            if (c.e.is_finite())
            {
                const double gap = h.value - gc.base.sff;
                c.e_allowance = gc.base.jf * h.error / (gap * gap);
            }
            else
                c.e_allowance = std::numeric_limits<double>::infinity();
            p.min_e[i] = min(p.min_e[i], c.e);
            out.push_back(c);
        }
    });

    const std::int64_t nodes = p.grid.size();
    p.e_node.assign(static_cast<std::size_t>(nodes), ExtLength::infinity());
    std::vector<std::size_t> alpha(static_cast<std::size_t>(nodes), 0);
    bool any_finite = false;
    parallel_for(static_cast<std::size_t>(nodes), [&](std::size_t k) {
        ExtLength best = ExtLength::infinity();
        std::size_t arg = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (const auto& c : p.critical[i])
            {
                if (c.e.is_infinite())
                    continue;
                const ExtLength v = c.e + p.grid.arc_distance(static_cast<std::int64_t>(k), c.where);
                if (v < best)
                {
                    best = v;
                    arg = i;
                }
            }
        p.e_node[k] = best;
        alpha[k] = arg;
    });
    p.e_global = ExtLength(0.0);
    for (const auto& e : p.e_node)
    {
        p.e_global = max(p.e_global, e);
        any_finite = any_finite || e.is_finite();
    }
    if (nodes == 0)
        p.e_global = ExtLength::infinity();
    if (any_finite)
        p.alpha = std::move(alpha);
    return p;
}

std::vector<std::size_t> gamma_set(const ProximityData& p, double epsilon1)
{
    std::vector<std::size_t> g;
    for (std::size_t i = 0; i < p.min_e.size(); ++i)
        if (p.min_e[i] < epsilon1)
            g.push_back(i);
    return g;
}

ExtLength gamma_cover(const ProximityData& p, const std::vector<std::size_t>& gamma)
{
    const std::int64_t nodes = p.grid.size();
    std::vector<ExtLength> per(static_cast<std::size_t>(nodes), ExtLength::infinity());
    parallel_for(static_cast<std::size_t>(nodes), [&](std::size_t k) {
        ExtLength best = ExtLength::infinity();
        for (auto i : gamma)
            for (const auto& c : p.critical[i])
                if (c.e.is_finite())
                    best = min(best, c.e + p.grid.arc_distance(static_cast<std::int64_t>(k), c.where));
        per[k] = best;
    });
    ExtLength worst(0.0);
    for (const auto& e : per)
        worst = max(worst, e);
    return nodes == 0 ? ExtLength::infinity() : worst;
}

nlohmann::json CertificateReport::to_json() const
{
    nlohmann::json j;
    j["pairs"] = pairs;
    j["pairs_skipped"] = pairs_skipped;
    j["tested"] = tested;
    j["failed"] = failed;
    j["complete"] = complete;
    j["status"] = pass() ? "PASS" : "FAIL";
    auto f = nlohmann::json::array();
    for (const auto& t : failures)
        f.push_back({{"x", t.x}, {"y", t.y}, {"r", t.r}, {"s", t.s}, {"delta", t.delta}, {"witness", nullptr}});
    j["failures"] = f;
    return j;
}

CertificateReport lentil_certificates(const DiscreteSpace& space, const std::vector<std::size_t>& gamma, double delta,
                                      int r_grid, bool stop_at_first_failure, std::size_t max_listed)
{
    require(delta > 0 && std::isfinite(delta), ErrorCode::invalid_argument, "lentil_certificates: delta must be positive");
    require(r_grid > 0, ErrorCode::invalid_argument, "lentil_certificates: r_grid must be positive");
    const std::size_t n = space.size();
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    CertificateReport rep;
    for (std::size_t a = 0; a < gamma.size(); ++a)
        for (std::size_t b = a + 1; b < gamma.size(); ++b)
        {
            if (space.dist(gamma[a], gamma[b]) > delta)
                pairs.emplace_back(gamma[a], gamma[b]);
            else
                ++rep.pairs_skipped;
        }
    rep.pairs = pairs.size();

    struct PairResult
    {
        std::size_t tested = 0;
        std::vector<LentilTest> failures;
        bool skipped = false;
    };
    std::vector<PairResult> results(pairs.size());
    std::atomic<bool> stop{false};
    parallel_for(pairs.size(), [&](std::size_t i) {
        auto& res = results[i];
        if (stop_at_first_failure && stop.load(std::memory_order_relaxed))
        {
            res.skipped = true;
            return;
        }
        const auto [x, y] = pairs[i];
        const double d = space.dist(x, y);
        // Any point of any lentil of this pair satisfies d(w,x) + d(w,y) < d + delta.
        std::vector<std::size_t> cand;
        for (std::size_t w = 0; w < n; ++w)
            if (space.dist(w, x) + space.dist(w, y) < d + delta)
                cand.push_back(w);
        for (int k = 0; k < r_grid; ++k)
        {
            LentilTest t;
            t.x = x;
            t.y = y;
            t.delta = delta;
            t.r = delta + (d - delta) * (k + 1) / (r_grid + 1);
            t.s = d - t.r + delta;
            for (auto w : cand)
                if (space.dist(w, x) < t.r && space.dist(w, y) < t.s)
                {
                    t.witness = w;
                    break;
                }
            ++res.tested;
            if (!t.witness)
            {
                res.failures.push_back(t);
                if (stop_at_first_failure)
                {
                    stop.store(true, std::memory_order_relaxed);
                    return;
                }
            }
        }
    });
    for (const auto& res : results)
    {
        if (res.skipped)
        {
            rep.complete = false;
            continue;
        }
        rep.tested += res.tested;
        rep.failed += res.failures.size();
        for (const auto& f : res.failures)
            if (rep.failures.size() < max_listed)
                rep.failures.push_back(f);
    }
    if (stop_at_first_failure && rep.failed > 0)
        rep.complete = false;
    return rep;
}

ExtLength density_bound(ExtLength epsilon2, const GeometryConstants& gc)
{
    if (epsilon2.is_infinite())
        return epsilon2;
    const double e = epsilon2.value();
    return ExtLength(gc.c10 * e + gc.c11 * std::sqrt(e));
}

ExtLength lgh_bound(ExtLength epsilon2, const GeometryConstants& gc)
{
    if (epsilon2.is_infinite())
        return epsilon2;
    const double e = epsilon2.value();
    return ExtLength(gc.c12 * e + gc.c11 * std::sqrt(e));
}

std::string to_string(ReconstructStatus s)
{
    switch (s)
    {
    case ReconstructStatus::certified:
        return "CERTIFIED";
    case ReconstructStatus::not_certified:
        return "NOT-CERTIFIED";
    case ReconstructStatus::one_point:
        return "ONE-POINT";
    }
    return "?";
}

nlohmann::json ReconstructReport::to_json() const
{
    nlohmann::json j;
    j["epsilon1"] = epsilon1;
    j["E"] = ext_json(e_global);
    j["epsilon2"] = ext_json(epsilon2);
    j["delta"] = ext_json(delta);
    j["gamma_indices"] = gamma;
    j["gamma_cover"] = ext_json(gamma_cover);
    j["certificates"] = certificates.to_json();
    j["epsilon_bound"] = ext_json(epsilon_bound);
    j["lgh_bound"] = ext_json(lgh);
    j["grid_slack"] = grid_slack;
    j["status"] = to_string(status);
    j["reason"] = reason;
    j["points"] = points;
    j["alpha"] = alpha;
    j["estimated_constants"] = estimated_constants;
    if (!sweep_epsilon1.empty())
        j["sweep_epsilon1"] = sweep_epsilon1;
    return j;
}

namespace {

ReconstructReport evaluate(const DiscreteSpace& space, const ProximityData& prox, const GeometryConstants& gc,
                           double epsilon1, const Tolerances& tol, bool stop_early)
{
    ReconstructReport r;
    r.epsilon1 = epsilon1;
    r.points = space.size();
    r.e_global = prox.e_global;
    r.epsilon2 = prox.e_global + epsilon1;
    r.delta = gc.c9 * r.epsilon2;
    r.gamma = gamma_set(prox, epsilon1);
    r.grid_slack = prox.grid.spacing();
    r.alpha = prox.alpha;
    r.estimated_constants = gc.base.estimated;
    r.epsilon_bound = density_bound(r.epsilon2, gc);
    r.lgh = lgh_bound(r.epsilon2, gc);
    r.status = ReconstructStatus::not_certified;
    if (r.e_global.is_infinite())
    {
        r.gamma_cover = ExtLength::infinity();
        r.reason = "E is infinite: some boundary node has no finite proximity estimate";
        return r;
    }
    r.gamma_cover = gamma_cover(prox, r.gamma);
    if (!(r.gamma_cover < r.epsilon2))
    {
        r.reason = "gamma does not reach every boundary node within epsilon_2";
        return r;
    }
    r.certificates = lentil_certificates(space, r.gamma, r.delta.value(), tol.r_grid, stop_early);
    if (!r.certificates.pass())
    {
        r.reason = "empty lentil found";
        return r;
    }
    r.status = ReconstructStatus::certified;
    return r;
}

}  // namespace

ReconstructReport reconstruct(const DiscreteSpace& space, const ProximityData& prox, const GeometryConstants& gc,
                              double epsilon1, const Tolerances& tol)
{
    require(epsilon1 >= 0 && std::isfinite(epsilon1), ErrorCode::invalid_argument,
            "reconstruct: epsilon_1 must be finite and non-negative");
    return evaluate(space, prox, gc, epsilon1, tol, false);
}

ReconstructReport reconstruct_sweep(const DiscreteSpace& space, const ProximityData& prox,
                                    const GeometryConstants& gc, const Tolerances& tol, int grid_count)
{
    require(grid_count > 0, ErrorCode::invalid_argument, "reconstruct_sweep: grid_count must be positive");
    double lo = std::numeric_limits<double>::infinity(), hi = 0;
    for (const auto& e : prox.min_e)
        if (e.is_finite())
        {
            lo = std::min(lo, e.value());
            hi = std::max(hi, e.value());
        }
    std::vector<double> grid;
    if (!std::isfinite(lo))
        grid.push_back(0.0);
    else
    {
        // Gamma needs min E(p,y) < epsilon_1 strictly; nudge each value up.
        const double up = 1.0 + 1e-9;
        lo = std::max(lo, 1e-300);
        if (grid_count == 1 || hi <= lo)
            grid.push_back(hi * up);
        else
            for (int i = 0; i < grid_count; ++i)
                grid.push_back(lo * std::pow(hi / lo, double(i) / (grid_count - 1)) * up);
    }
    ReconstructReport last;
    for (double e1 : grid)
    {
        auto r = evaluate(space, prox, gc, e1, tol, true);
        if (r.status == ReconstructStatus::certified)
        {
            r.sweep_epsilon1 = grid;
            return r;
        }
        last = std::move(r);
    }
    // Nothing certified: report the largest epsilon_1 in full.
    last = evaluate(space, prox, gc, grid.back(), tol, false);
    last.sweep_epsilon1 = grid;
    return last;
}

ReconstructReport one_point_report(const GeometryConstants& gc, const BoundaryGrid& grid, const std::string& why)
{
    ReconstructReport r;
    r.status = ReconstructStatus::one_point;
    r.reason = why;
    r.points = 1;
    // One point carrying every label: M x {pt} has distortion diam M, the
    // label pairs differ by at most diam M, and every profile gap is a
    // distance in M, so the glued cost is at most diam M.
    r.lgh = ExtLength(gc.base.diam);
    r.epsilon_bound = ExtLength(gc.base.diam);
    r.e_global = ExtLength::infinity();
    r.epsilon2 = ExtLength::infinity();
    r.delta = ExtLength::infinity();
    r.gamma_cover = ExtLength::infinity();
    r.grid_slack = grid.size() > 0 ? grid.spacing() : 0.0;
    r.alpha.assign(static_cast<std::size_t>(grid.size()), 0);
    r.estimated_constants = gc.base.estimated;
    return r;
}


PipelineResult run_pipeline(const ArrivalCloud& cloud, const GeometryConstants& gc, const Tolerances& tol,
                            std::optional<double> epsilon1)
{
    PipelineResult out;
    out.separation = separate(cloud, tol);
    const auto grid = cloud.header.grid();
    if (out.separation.functions.empty())
    {
        out.report = one_point_report(gc, grid, "no complete arrival graph");
        return out;
    }
    const auto dd = dedupe_spatial(out.separation.functions, tol.const_tol_factor * data_tol_dist(cloud.header, tol));
    out.merged_into = dd.representative_of;
    out.space = DiscreteSpace::assemble(dd.representatives, cloud.header, tol);
    out.prox = proximity(*out.space, gc, tol);
    if (epsilon1)
        out.report = reconstruct(*out.space, *out.prox, gc, *epsilon1, tol);
    else
        out.report = reconstruct_sweep(*out.space, *out.prox, gc, tol);
    return out;
}

std::vector<WindowResult> window_reconstruct(const ArrivalCloud& cloud, const std::vector<double>& t_list,
                                             const GeometryConstants& gc, const Tolerances& tol)
{
    for (std::size_t i = 1; i < t_list.size(); ++i)
        require(t_list[i] > t_list[i - 1], ErrorCode::invalid_argument, "window: T values must be ascending");
    std::vector<WindowResult> out;
    for (double t : t_list)
    {
        ArrivalCloud c;
        c.header = cloud.header;
        c.header.t_max = std::min(cloud.header.t_max, t);
        for (const auto& s : cloud.samples)
            if (s.time <= t)
                c.samples.push_back(s);
        WindowResult w;
        w.t = t;
        w.samples = c.samples.size();
        w.result = run_pipeline(c, gc, tol);
        w.complete_graphs = w.result.separation.functions.size();
        out.push_back(std::move(w));
    }
    return out;
}

}  // namespace lentil
