#include "lentil/metricspace.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <random>
#include <set>

#include "lentil/error.hpp"
#include "lentil/parallel.hpp"
#include "lentil/reconstruct.hpp"

namespace lentil {

LabeledMetricSpace::LabeledMetricSpace(std::size_t n, std::vector<double> dist,
                                       std::map<std::int64_t, std::size_t> labels)
    : n_(n), d_(std::move(dist)), labels_(std::move(labels))
{
    require(n > 0, ErrorCode::invalid_argument, "metric space: need at least one point");
    require(d_.size() == n * n, ErrorCode::invalid_argument, "metric space: distance matrix must be n x n");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
        {
            const double v = d_[i * n + j];
            require(std::isfinite(v) && v >= 0, ErrorCode::constraint,
                    "metric space: distance (" + std::to_string(i) + ", " + std::to_string(j) +
                        ") must be finite and non-negative");
            require(v == d_[j * n + i], ErrorCode::constraint,
                    "metric space: distance matrix is not symmetric at (" + std::to_string(i) + ", " +
                        std::to_string(j) + ")");
        }
    for (const auto& [l, p] : labels_)
        require(p < n, ErrorCode::constraint, "metric space: label " + std::to_string(l) + " points outside the space");
}

double LabeledMetricSpace::diameter() const
{
    return d_.empty() ? 0.0 : *std::max_element(d_.begin(), d_.end());
}

double LabeledMetricSpace::metric_defect() const
{
    double worst = 0;
    for (std::size_t a = 0; a < n_; ++a)
        for (std::size_t b = 0; b < n_; ++b)
            for (std::size_t c = 0; c < n_; ++c)
                worst = std::max(worst, dist(a, c) - dist(a, b) - dist(b, c));
    return worst;
}

nlohmann::json LabeledMetricSpace::to_json() const
{
    nlohmann::json j;
    j["n"] = n_;
    std::vector<double> lower;
    for (std::size_t i = 1; i < n_; ++i)
        for (std::size_t k = 0; k < i; ++k)
            lower.push_back(dist(i, k));
    j["dist"] = lower;
    auto labels = nlohmann::json::array();
    for (const auto& [l, p] : labels_)
        labels.push_back({{"label_id", l}, {"point_index", p}});
    j["labels"] = labels;
    return j;
}

LabeledMetricSpace LabeledMetricSpace::from_json(const nlohmann::json& j)
{
    try
    {
        const auto n = j.at("n").get<std::size_t>();
        const auto lower = j.at("dist").get<std::vector<double>>();
        require(lower.size() == n * (n - 1) / 2, ErrorCode::constraint,
                "metric space: 'dist' must hold n(n-1)/2 entries (strict lower triangle)");
        std::vector<double> d(n * n, 0.0);
        std::size_t k = 0;
        for (std::size_t a = 1; a < n; ++a)
            for (std::size_t b = 0; b < a; ++b, ++k)
                d[a * n + b] = d[b * n + a] = lower[k];
        std::map<std::int64_t, std::size_t> labels;
        if (j.contains("labels"))
            for (const auto& l : j.at("labels"))
            {
                const auto id = l.at("label_id").get<std::int64_t>();
                require(labels.emplace(id, l.at("point_index").get<std::size_t>()).second, ErrorCode::constraint,
                        "metric space: label " + std::to_string(id) + " given twice");
            }
        return LabeledMetricSpace(n, std::move(d), std::move(labels));
    }
    catch (const nlohmann::json::exception& e)
    {
        fail(ErrorCode::parse, std::string("metric space: ") + e.what());
    }
}

LabeledMetricSpace LabeledMetricSpace::from_space(const DiscreteSpace& space, const std::vector<std::size_t>& alpha)
{
    require(static_cast<std::int64_t>(alpha.size()) == space.grid().size(), ErrorCode::invalid_argument,
            "metric space: alpha must give one point per grid node");
    std::map<std::int64_t, std::size_t> labels;
    for (std::size_t k = 0; k < alpha.size(); ++k)
        labels[static_cast<std::int64_t>(k)] = alpha[k];
    auto d = space.dist_matrix();
    // Recovered distances are symmetric by construction; zero the diagonal exactly.
    for (std::size_t i = 0; i < space.size(); ++i)
        d[i * space.size() + i] = 0.0;
    return LabeledMetricSpace(space.size(), std::move(d), std::move(labels));
}

namespace {

using LabelPairs = std::vector<std::pair<std::size_t, std::size_t>>;

LabelPairs label_pairs(const LabeledMetricSpace& x, const LabeledMetricSpace& y)
{
    const auto& a = x.labels();
    const auto& b = y.labels();
    require(a.size() == b.size(), ErrorCode::invalid_argument, "lGH: the two spaces have different label sets");
    std::set<std::pair<std::size_t, std::size_t>> s;
    for (const auto& [l, p] : a)
    {
        const auto it = b.find(l);
        require(it != b.end(), ErrorCode::invalid_argument,
                "lGH: label " + std::to_string(l) + " is missing from the second space");
        s.emplace(p, it->second);
    }
    return LabelPairs(s.begin(), s.end());
}

LabelPairs subsample(const LabelPairs& p, std::size_t k)
{
    if (k == 0 || p.size() <= k)
        return p;
    LabelPairs out;
    for (std::size_t i = 0; i < k; ++i)
        out.push_back(p[i * p.size() / k]);
    return out;
}

double label_term(const LabeledMetricSpace& x, const LabeledMetricSpace& y, const LabelPairs& lp)
{
    double b = 0;
    for (std::size_t i = 0; i < lp.size(); ++i)
        for (std::size_t j = i + 1; j < lp.size(); ++j)
            b = std::max(b, std::abs(x.dist(lp[i].first, lp[j].first) - y.dist(lp[i].second, lp[j].second)));
    return 0.5 * b;
}

// max over label pairs of |dX(x, a) - dY(y, b)|
double profile(const LabeledMetricSpace& x, const LabeledMetricSpace& y, const LabelPairs& lp, std::size_t i,
               std::size_t j)
{
    double c = 0;
    for (const auto& [a, b] : lp)
        c = std::max(c, std::abs(x.dist(i, a) - y.dist(j, b)));
    return c;
}

double distortion(const LabeledMetricSpace& x, const LabeledMetricSpace& y, const Correspondence& r)
{
    std::vector<double> worst(r.size(), 0.0);
    parallel_for(r.size(), [&](std::size_t i) {
        double w = 0;
        for (std::size_t j = i + 1; j < r.size(); ++j)
            w = std::max(w, std::abs(x.dist(r[i].first, r[j].first) - y.dist(r[i].second, r[j].second)));
        worst[i] = w;
    });
    return worst.empty() ? 0.0 : *std::max_element(worst.begin(), worst.end());
}

double cost_with(const LabeledMetricSpace& x, const LabeledMetricSpace& y, const Correspondence& r,
                 const LabelPairs& lp, double b)
{
    std::vector<double> c(r.size(), 0.0);
    parallel_for(r.size(), [&](std::size_t i) { c[i] = profile(x, y, lp, r[i].first, r[i].second); });
    const double cmax = c.empty() ? 0.0 : *std::max_element(c.begin(), c.end());
    return std::max(0.5 * distortion(x, y, r) + b, cmax);
}

void check_correspondence(const LabeledMetricSpace& x, const LabeledMetricSpace& y, const Correspondence& r)
{
    std::vector<char> cx(x.size(), 0), cy(y.size(), 0);
    for (const auto& [a, b] : r)
    {
        require(a < x.size() && b < y.size(), ErrorCode::invalid_argument, "correspondence: index out of range");
        cx[a] = cy[b] = 1;
    }
    require(std::all_of(cx.begin(), cx.end(), [](char c) { return c; }) &&
                std::all_of(cy.begin(), cy.end(), [](char c) { return c; }),
            ErrorCode::invalid_argument, "correspondence: every point of both spaces must be covered");
}

std::vector<double> eccentricity(const LabeledMetricSpace& s)
{
    std::vector<double> e(s.size(), 0.0);
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < s.size(); ++j)
            e[i] = std::max(e[i], s.dist(i, j));
    return e;
}

}  // namespace

double correspondence_cost(const LabeledMetricSpace& x, const LabeledMetricSpace& y, const Correspondence& r)
{
    check_correspondence(x, y, r);
    const auto lp = label_pairs(x, y);
    return cost_with(x, y, r, lp, label_term(x, y, lp));
}

namespace {

double greedy_upper(const LabeledMetricSpace& x, const LabeledMetricSpace& y)
{
    const auto lp = label_pairs(x, y);
    const double b = label_term(x, y, lp);
    const auto choice = subsample(lp, 256);
    const auto ex = eccentricity(x), ey = eccentricity(y);
    auto score = [&](std::size_t i, std::size_t j) {
        return choice.empty() ? std::abs(ex[i] - ey[j]) : profile(x, y, choice, i, j);
    };
    std::vector<std::size_t> fx(x.size()), gy(y.size());
    parallel_for(x.size(), [&](std::size_t i) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < y.size(); ++j)
            if (const double s = score(i, j); s < best)
                best = s, fx[i] = j;
    });
    parallel_for(y.size(), [&](std::size_t j) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < x.size(); ++i)
            if (const double s = score(i, j); s < best)
                best = s, gy[j] = i;
    });
    std::set<std::pair<std::size_t, std::size_t>> r;
    for (std::size_t i = 0; i < x.size(); ++i)
        r.emplace(i, fx[i]);
    for (std::size_t j = 0; j < y.size(); ++j)
        r.emplace(gy[j], j);
    double best = cost_with(x, y, Correspondence(r.begin(), r.end()), lp, b);

    // All of X x Y is a correspondence too; cheap to bound without listing it.
    double cmax = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < y.size(); ++j)
            cmax = std::max(cmax, profile(x, y, lp, i, j));
    best = std::min(best, std::max(0.5 * std::max(x.diameter(), y.diameter()) + b, cmax));
    return best;
}

}  // namespace

double lgh_upper(const LabeledMetricSpace& x, const LabeledMetricSpace& y)
{
    // Small spaces: the optimal correspondence is itself the best explicit one.
    if (x.size() <= lgh_exact_limit && y.size() <= lgh_exact_limit)
        return lgh_exact(x, y);
    return greedy_upper(x, y);
}

double lgh_exact(const LabeledMetricSpace& x, const LabeledMetricSpace& y)
{
    require(x.size() <= lgh_exact_limit && y.size() <= lgh_exact_limit, ErrorCode::invalid_argument,
            "lgh_exact: spaces larger than " + std::to_string(lgh_exact_limit) + " points");
    const auto lp = label_pairs(x, y);
    const double b = label_term(x, y, lp);
    const std::size_t nx = x.size(), ny = y.size();
    std::vector<double> pc(nx * ny);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j)
            pc[i * ny + j] = profile(x, y, lp, i, j);

    double best = greedy_upper(x, y);
    std::mutex mu;
    // Minimal correspondences are graph(f) u graph(g)^T; the cost only grows
    // with R, so f is chosen first, then g on the points f misses.
    struct State
    {
        Correspondence r;
        double dis = 0, c = 0;
    };
    auto cost = [&](const State& s) { return std::max(0.5 * s.dis + b, s.c); };
    auto add = [&](const State& s, std::size_t i, std::size_t j) {
        State t = s;
        for (const auto& [a, bb] : s.r)
            t.dis = std::max(t.dis, std::abs(x.dist(i, a) - y.dist(j, bb)));
        t.c = std::max(t.c, pc[i * ny + j]);
        t.r.emplace_back(i, j);
        return t;
    };
    std::function<void(const State&, std::size_t, double&)> search = [&](const State& s, std::size_t depth,
                                                                        double& local) {
        if (cost(s) >= local)
            return;
        if (depth < nx)
        {
            for (std::size_t j = 0; j < ny; ++j)
                search(add(s, depth, j), depth + 1, local);
            return;
        }
        std::vector<char> covered(ny, 0);
        for (const auto& [a, bb] : s.r)
            covered[bb] = 1;
        std::size_t miss = ny;
        for (std::size_t j = 0; j < ny; ++j)
            if (!covered[j])
            {
                miss = j;
                break;
            }
        if (miss == ny)
        {
            local = cost(s);
            return;
        }
        for (std::size_t i = 0; i < nx; ++i)
            search(add(s, i, miss), depth + 1, local);
    };
    parallel_for(ny, [&](std::size_t j0) {
        double local;
        {
            std::lock_guard<std::mutex> lock(mu);
            local = best;
        }
        search(add(State{}, 0, j0), 1, local);
        std::lock_guard<std::mutex> lock(mu);
        best = std::min(best, local);
    });
    return best;
}

double lgh_lower(const LabeledMetricSpace& x, const LabeledMetricSpace& y, std::size_t label_subsample)
{
    if (x.size() <= lgh_exact_limit && y.size() <= lgh_exact_limit)
        return lgh_exact(x, y);
    const auto lp = label_pairs(x, y);
    const double b = label_term(x, y, lp);
    double lo = 0.5 * std::abs(x.diameter() - y.diameter()) + b;

    // Every x is paired with some y: |ecc(x) - ecc(y)| <= dis(R).
    const auto ex = eccentricity(x), ey = eccentricity(y);
    auto ecc_side = [](const std::vector<double>& a, const std::vector<double>& c) {
        double w = 0;
        for (double v : a)
        {
            double m = std::numeric_limits<double>::infinity();
            for (double u : c)
                m = std::min(m, std::abs(v - u));
            w = std::max(w, m);
        }
        return w;
    };
    lo = std::max(lo, 0.5 * std::max(ecc_side(ex, ey), ecc_side(ey, ex)) + b);

    // ... and then C(R) is at least that pair's label profile.
    const auto sub = subsample(lp, label_subsample);
    if (!sub.empty())
    {
        std::vector<double> px(x.size()), py(y.size());
        parallel_for(x.size(), [&](std::size_t i) {
            double m = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < y.size(); ++j)
                m = std::min(m, profile(x, y, sub, i, j));
            px[i] = m;
        });
        parallel_for(y.size(), [&](std::size_t j) {
            double m = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < x.size(); ++i)
                m = std::min(m, profile(x, y, sub, i, j));
            py[j] = m;
        });
        lo = std::max({lo, *std::max_element(px.begin(), px.end()), *std::max_element(py.begin(), py.end())});
    }
    return lo;
}

nlohmann::json LghBounds::to_json() const
{
    return {{"lower", lower}, {"upper", upper}, {"exact", exact}};
}

LghBounds lgh_bounds(const LabeledMetricSpace& x, const LabeledMetricSpace& y)
{
    LghBounds b;
    b.exact = x.size() <= lgh_exact_limit && y.size() <= lgh_exact_limit;
    if (b.exact)
        b.lower = b.upper = lgh_exact(x, y);
    else
    {
        b.lower = lgh_lower(x, y);
        b.upper = lgh_upper(x, y);
    }
    return b;
}

nlohmann::json SampledLgh::to_json() const
{
    auto j = bounds.to_json();
    j["sample_n"] = sample_n;
    j["sampling_slack"] = sampling_slack;
    j["grid_slack"] = grid_slack;
    return j;
}

LabeledMetricSpace model_snapshot(const ManifoldModel& model, const std::vector<Vec2>& interior,
                                  const BoundaryGrid& grid)
{
    std::vector<Vec2> pts = interior;
    const auto nodes = model.boundary_nodes(grid);
    pts.insert(pts.end(), nodes.begin(), nodes.end());
    const std::size_t n = pts.size();
    std::vector<double> d(n * n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j)
            d[i * n + j] = model.distance(pts[i], pts[j]);
    });
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
            d[i * n + j] = d[j * n + i];
    std::map<std::int64_t, std::size_t> labels;
    for (std::size_t k = 0; k < nodes.size(); ++k)
        labels[static_cast<std::int64_t>(k)] = interior.size() + k;
    return LabeledMetricSpace(n, std::move(d), std::move(labels));
}

SampledLgh sampled_lgh_vs_manifold(const DiscreteSpace& space, const std::vector<std::size_t>& alpha,
                                   const ManifoldModel& model, std::size_t sample_n, std::uint64_t seed)
{
    require(!alpha.empty(), ErrorCode::invalid_argument, "sampled_lgh: alpha is undefined (E infinite)");
    const auto grid = space.grid();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Vec2> interior;
    for (std::size_t i = 0; i < sample_n; ++i)
    {
        const double r = model.radius() * std::sqrt(u(rng));
        interior.push_back(unit_from_angle(two_pi * u(rng)) * r);
    }
    const auto y = model_snapshot(model, interior, grid);
    const auto x = LabeledMetricSpace::from_space(space, alpha);
    SampledLgh out;
    out.sample_n = sample_n;
    out.bounds.exact = false;
    out.bounds.lower = lgh_lower(x, y);
    out.bounds.upper = lgh_upper(x, y);
    auto all = interior;
    const auto nodes = model.boundary_nodes(grid);
    all.insert(all.end(), nodes.begin(), nodes.end());
    out.sampling_slack = measure_density(model, all, 10000, seed + 1).density;
    out.grid_slack = grid.spacing();
    return out;
}

}  // namespace lentil
