#include "lentil/disentangle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "lentil/error.hpp"
#include "lentil/vec2.hpp"

namespace lentil {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

struct Track
{
    std::vector<double> seed;  // values before the first sweep node (pass 2)
    std::vector<double> values;
    std::int64_t first = 0;  // sweep offset of values[0]
    bool alive = true;
    int seed_id = -1;

    double predict() const
    {
        // Quadratic continuation uses value, slope and curvature of the
        // last three samples; shorter histories degrade to lower order.
        auto at = [&](std::size_t back) {
            const std::size_t n = values.size();
            return back < n ? values[n - 1 - back] : seed[seed.size() - 1 - (back - n)];
        };
        const std::size_t h = values.size() + seed.size();
        if (h >= 3)
            return 3 * at(0) - 3 * at(1) + at(2);
        if (h == 2)
            return 2 * at(0) - at(1);
        return at(0);
    }
    std::size_t history() const { return values.size() + seed.size(); }

    // Expected size of the prediction error. The quadratic continuation is
    // off by about the third difference, which grows quickly near the sharp
    // minimum of a source close to the boundary.
    double uncertainty(double gate, double floor) const
    {
        auto at = [&](std::size_t back) {
            const std::size_t n = values.size();
            return back < n ? values[n - 1 - back] : seed[seed.size() - 1 - (back - n)];
        };
        const std::size_t h = history();
        if (h < 4)
            return h == 3 ? 0.25 * gate : 0.5 * gate;
        double d3 = std::abs(at(0) - 3 * at(1) + 3 * at(2) - at(3));
        if (h >= 5)
            d3 = std::max(d3, std::abs(at(1) - 3 * at(2) + 3 * at(3) - at(4)));
        return 2 * d3 + floor;
    }
};

struct Pass
{
    std::vector<Track> tracks;
    std::vector<double> residuals;  // quadratic-prediction residuals
};

using NodeObs = std::vector<std::vector<double>>;

// Order-preserving assignment of sorted predictions to sorted observations.
// Returns for each prediction the matched observation or -1.
std::vector<int> match_ordered(const std::vector<double>& pred, const std::vector<double>& obs, double gate)
{
    const std::size_t n = pred.size(), m = obs.size();
    const double skip = gate * gate;
    std::vector<double> dp((n + 1) * (m + 1), inf);
    std::vector<char> how((n + 1) * (m + 1), 0);  // 1 match, 2 skip track, 3 skip obs
    auto at = [&](std::size_t i, std::size_t j) -> std::size_t { return i * (m + 1) + j; };
    dp[at(0, 0)] = 0;
    for (std::size_t i = 0; i <= n; ++i)
        for (std::size_t j = 0; j <= m; ++j)
        {
            const double cur = dp[at(i, j)];
            if (cur == inf)
                continue;
            if (i < n && j < m)
            {
                const double d = pred[i] - obs[j];
                if (std::abs(d) <= gate && cur + d * d < dp[at(i + 1, j + 1)])
                {
                    dp[at(i + 1, j + 1)] = cur + d * d;
                    how[at(i + 1, j + 1)] = 1;
                }
            }
            if (i < n && cur + skip < dp[at(i + 1, j)])
            {
                dp[at(i + 1, j)] = cur + skip;
                how[at(i + 1, j)] = 2;
            }
            if (j < m && cur + skip < dp[at(i, j + 1)])
            {
                dp[at(i, j + 1)] = cur + skip;
                how[at(i, j + 1)] = 3;
            }
        }
    std::vector<int> out(n, -1);
    std::size_t i = n, j = m;
    while (i > 0 || j > 0)
    {
        switch (how[at(i, j)])
        {
        case 1:
            out[--i] = static_cast<int>(--j);
            break;
        case 2:
            --i;
            break;
        default:
            --j;
            break;
        }
    }
    return out;
}

// Min-cost perfect assignment of rows to columns (square matrix).
std::vector<int> hungarian(const std::vector<std::vector<double>>& a)
{
    const std::size_t n = a.size();
    std::vector<double> u(n + 1, 0), v(n + 1, 0), way_cost(n + 1);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i)
    {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do
        {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j)
                if (!used[j])
                {
                    const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                    if (cur < minv[j])
                    {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if (minv[j] < delta)
                    {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            for (std::size_t j = 0; j <= n; ++j)
                if (used[j])
                {
                    u[p[j]] += delta;
                    v[j] -= delta;
                }
                else
                    minv[j] -= delta;
            j0 = j1;
        } while (p[j0] != 0);
        do
        {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row(n, -1);
    for (std::size_t j = 1; j <= n; ++j)
        if (p[j])
            row[p[j] - 1] = static_cast<int>(j - 1);
    return row;
}

// Predictions (sorted) are matched to sorted observations cluster by cluster,
// a cluster being a connected set under |pred - obs| <= gate. Where a cluster
// has as many predictions as observations the cost is the error in units of
// each track's uncertainty, and predicted orders may cross; otherwise births
// or deaths are involved and the order-preserving matcher decides.
std::vector<int> match(const std::vector<double>& pred, const std::vector<double>& sigma,
                       const std::vector<double>& obs, double gate)
{
    const std::size_t n = pred.size(), m = obs.size();
    std::vector<int> out(n, -1);
    std::size_t i = 0;
    while (i < n)
    {
        // Observations within the gate of pred[i] form a contiguous range.
        auto lo_of = [&](std::size_t k) {
            return static_cast<std::size_t>(std::lower_bound(obs.begin(), obs.end(), pred[k] - gate) - obs.begin());
        };
        auto hi_of = [&](std::size_t k) {
            return static_cast<std::size_t>(std::upper_bound(obs.begin(), obs.end(), pred[k] + gate) - obs.begin());
        };
        const std::size_t olo = lo_of(i);
        std::size_t ohi = hi_of(i);
        std::size_t j = i + 1;
        while (j < n && lo_of(j) < ohi)
        {
            ohi = std::max(ohi, hi_of(j));
            ++j;
        }
        const std::size_t np = j - i, no = ohi > olo ? ohi - olo : 0;
        if (no == 0)
        {
            i = j;
            continue;
        }
        std::vector<int> local;
        bool done = false;
        if (np == no)
        {
            const double big = 1e30;
            std::vector<std::vector<double>> cost(np, std::vector<double>(no, big));
            for (std::size_t a = 0; a < np; ++a)
                for (std::size_t b = 0; b < no; ++b)
                {
                    const double d = pred[i + a] - obs[olo + b];
                    if (std::abs(d) <= gate)
                        cost[a][b] = std::min(d * d / (sigma[i + a] * sigma[i + a]), 1e24);
                }
            local = hungarian(cost);
            done = true;
            for (std::size_t a = 0; a < np; ++a)
                if (local[a] < 0 || cost[a][static_cast<std::size_t>(local[a])] >= big)
                    done = false;
        }
        if (!done)
            local = match_ordered(std::vector<double>(pred.begin() + static_cast<std::ptrdiff_t>(i),
                                                      pred.begin() + static_cast<std::ptrdiff_t>(j)),
                                  std::vector<double>(obs.begin() + static_cast<std::ptrdiff_t>(olo),
                                                      obs.begin() + static_cast<std::ptrdiff_t>(ohi)),
                                  gate);
        for (std::size_t a = 0; a < np; ++a)
            if (local[a] >= 0)
                out[i + a] = static_cast<int>(olo) + local[a];
        i = j;
    }
    (void)m;
    return out;
}

Pass sweep(const NodeObs& obs, std::int64_t start, double gate, double floor,
           const std::vector<std::vector<double>>& seeds)
{
    const std::int64_t n = static_cast<std::int64_t>(obs.size());
    Pass p;
    for (std::size_t i = 0; i < seeds.size(); ++i)
    {
        Track t;
        t.seed = seeds[i];
        t.seed_id = static_cast<int>(i);
        p.tracks.push_back(std::move(t));
    }
    std::vector<std::size_t> live;
    std::vector<double> pred;
    for (std::int64_t k = 0; k < n; ++k)
    {
        const auto& here = obs[static_cast<std::size_t>((start + k) % n)];
        live.clear();
        for (std::size_t i = 0; i < p.tracks.size(); ++i)
            if (p.tracks[i].alive)
                live.push_back(i);
        pred.resize(live.size());
        for (std::size_t i = 0; i < live.size(); ++i)
            pred[i] = p.tracks[live[i]].predict();
        std::vector<std::size_t> order(live.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return pred[a] != pred[b] ? pred[a] < pred[b] : live[a] < live[b];
        });
        std::vector<double> sorted_pred(order.size()), sigma(order.size());
        for (std::size_t i = 0; i < order.size(); ++i)
        {
            sorted_pred[i] = pred[order[i]];
            sigma[i] = p.tracks[live[order[i]]].uncertainty(gate, floor);
        }
        const auto m = match(sorted_pred, sigma, here, gate);
        std::vector<char> used(here.size(), 0);
        for (std::size_t i = 0; i < order.size(); ++i)
        {
            Track& t = p.tracks[live[order[i]]];
            if (m[i] < 0)
            {
                t.alive = false;
                continue;
            }
            const double v = here[static_cast<std::size_t>(m[i])];
            if (t.history() >= 3)
                p.residuals.push_back(std::abs(v - sorted_pred[i]));
            if (t.values.empty())
                t.first = k;
            t.values.push_back(v);
            used[static_cast<std::size_t>(m[i])] = 1;
        }
        for (std::size_t j = 0; j < here.size(); ++j)
            if (!used[j])
            {
                Track t;
                t.first = k;
                t.values.push_back(here[j]);
                p.tracks.push_back(std::move(t));
            }
    }
    return p;
}

double median(std::vector<double> v)
{
    if (v.empty())
        return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

std::vector<double> last_values(const std::vector<double>& v, std::size_t k)
{
    return std::vector<double>(v.end() - static_cast<std::ptrdiff_t>(std::min(k, v.size())), v.end());
}

bool same_tail(const std::vector<double>& values, const std::vector<double>& seed)
{
    if (seed.empty() || values.size() < seed.size())
        return false;
    for (std::size_t i = 0; i < seed.size(); ++i)
        if (values[values.size() - seed.size() + i] != seed[i])
            return false;
    return true;
}

void canonicalize(std::vector<ArrivalFunction>& fs)
{
    auto key = [](const ArrivalFunction& f) {
        const auto [lo, hi] = std::minmax_element(f.values.begin(), f.values.end());
        return std::make_pair(*lo, *hi);
    };
    std::stable_sort(fs.begin(), fs.end(), [&](const ArrivalFunction& a, const ArrivalFunction& b) {
        const auto ka = key(a), kb = key(b);
        if (ka != kb)
            return ka < kb;
        return a.values < b.values;
    });
    for (std::size_t i = 0; i < fs.size(); ++i)
        fs[i].source_tag = static_cast<std::int64_t>(i);
}

// Jet mismatch if the tails of f and g were exchanged after node k: each
// head's quadratic continuation is compared with the other tail over the next
// two nodes (one node is not enough when the crossing sits on a node).
double swap_residual(const std::vector<double>& f, const std::vector<double>& g, std::size_t k)
{
    const auto n = static_cast<std::ptrdiff_t>(f.size());
    auto at = [&](const std::vector<double>& v, std::ptrdiff_t i) { return v[static_cast<std::size_t>((n + i) % n)]; };
    const auto ki = static_cast<std::ptrdiff_t>(k);
    double worst = 0;
    for (const auto* pair : {&f, &g})
    {
        const auto& head = *pair;
        const auto& tail = pair == &f ? g : f;
        const double p1 = 3 * at(head, ki) - 3 * at(head, ki - 1) + at(head, ki - 2);
        const double p2 = 6 * at(head, ki) - 8 * at(head, ki - 1) + 3 * at(head, ki - 2);
        worst = std::max({worst, std::abs(p1 - at(tail, ki + 1)), std::abs(p2 - at(tail, ki + 2))});
    }
    return worst;
}

}  // namespace

double min_crossing_separation(const std::vector<double>& f, const std::vector<double>& g, double gate)
{
    require(f.size() == g.size() && f.size() >= 3, ErrorCode::invalid_argument,
            "min_crossing_separation: functions must share a grid of at least 3 nodes");
    double best = inf;
    for (std::size_t k = 0; k < f.size(); ++k)
        if (std::abs(f[k] - g[k]) <= gate)
            best = std::min(best, swap_residual(f, g, k));
    return best;
}

double data_tol_dist(const CloudHeader& header, const Tolerances& tol)
{
    return tol.tol_dist_rel * header.boundary_length / pi;
}

SeparationResult separate(const ArrivalCloud& cloud, const Tolerances& tol)
{
    const BoundaryGrid grid = cloud.header.grid();
    const std::int64_t n = grid.size();
    SeparationResult out;
    out.header = cloud.header;

    NodeObs obs(static_cast<std::size_t>(n));
    for (const auto& s : cloud.samples)
    {
        const double off = s.param / grid.spacing();
        require(std::abs(off - std::round(off)) < 1e-6, ErrorCode::constraint,
                "separate: sample parameter " + std::to_string(s.param) + " is not on the boundary grid");
        obs[static_cast<std::size_t>(grid.nearest_node(s.param))].push_back(s.time);
    }
    for (auto& o : obs)
        std::sort(o.begin(), o.end());
    if (cloud.samples.empty())
        return out;

    // Start where the graphs are best separated.
    std::int64_t start = 0;
    double best_gap = -1;
    for (std::int64_t k = 0; k < n; ++k)
    {
        const auto& o = obs[static_cast<std::size_t>(k)];
        if (o.empty())
            continue;
        double gap = inf;
        for (std::size_t i = 1; i < o.size(); ++i)
            gap = std::min(gap, o[i] - o[i - 1]);
        if (gap > best_gap)
        {
            best_gap = gap;
            start = k;
        }
    }
    out.sweep_start = start;

    const double gate = 2.0 * grid.spacing() + 6.0 * cloud.header.noise_amplitude;
    const double floor = std::max(1e-6 * gate, 4.0 * cloud.header.noise_amplitude);
    const Pass first = sweep(obs, start, gate, floor, {});

    // Second pass: tracks alive at the end of the first are continued through
    // the start node so that closure uses a full jet.
    std::vector<std::vector<double>> seeds;
    for (const auto& t : first.tracks)
        if (t.alive && t.first + static_cast<std::int64_t>(t.values.size()) == n)
            seeds.push_back(last_values(t.values, 3));
    const Pass second = sweep(obs, start, gate, floor, seeds);

    out.jet_tol = tol.jet_tol_abs > 0
                      ? tol.jet_tol_abs
                      : std::max(tol.jet_tol_factor * median(second.residuals), 1e-12 * grid.length());

    std::vector<char> consumed(second.tracks.size(), 0);
    for (std::size_t i = 0; i < second.tracks.size(); ++i)
    {
        const Track& t = second.tracks[i];
        if (t.seed_id >= 0 && static_cast<std::int64_t>(t.values.size()) == n)
        {
            ArrivalFunction f;
            f.values.assign(static_cast<std::size_t>(n), 0.0);
            for (std::int64_t k = 0; k < n; ++k)
                f.values[static_cast<std::size_t>((start + k) % n)] = t.values[static_cast<std::size_t>(k)];
            for (std::size_t j = 0; j < t.seed.size(); ++j)
                out.closure_residual = std::max(
                    out.closure_residual, std::abs(t.values[t.values.size() - t.seed.size() + j] - t.seed[j]));
            out.functions.push_back(std::move(f));
            consumed[i] = 1;
        }
    }
    // Partial graphs that wrap past the start node are reassembled from the
    // piece that ends the sweep and the seeded piece that begins it.
    for (std::size_t i = 0; i < second.tracks.size(); ++i)
    {
        if (consumed[i])
            continue;
        const Track& t = second.tracks[i];
        PartialFunction pf;
        pf.start = (start + t.first) % n;
        pf.values = t.values;
        if (t.alive && t.first + static_cast<std::int64_t>(t.values.size()) == n)
            for (std::size_t j = 0; j < second.tracks.size(); ++j)
            {
                const Track& s = second.tracks[j];
                if (j == i || consumed[j] || s.seed_id < 0 || !same_tail(t.values, s.seed))
                    continue;
                if (static_cast<std::int64_t>(t.values.size() + s.values.size()) > n)
                    continue;
                pf.values.insert(pf.values.end(), s.values.begin(), s.values.end());
                consumed[j] = 1;
                break;
            }
        consumed[i] = 1;
        if (!pf.values.empty())
            out.partials.push_back(std::move(pf));
    }
    std::sort(out.partials.begin(), out.partials.end(), [](const PartialFunction& a, const PartialFunction& b) {
        return a.start != b.start ? a.start < b.start : a.values < b.values;
    });

    canonicalize(out.functions);

    if (out.closure_residual > out.jet_tol)
        out.ambiguities.push_back({start, -1, -1, out.closure_residual});

    // A close approach is ambiguous when exchanging tails is as smooth as the
    // chosen continuation, i.e. the 2-jets do not separate the branches.
    const std::size_t nf = out.functions.size();
    for (std::size_t a = 0; a < nf; ++a)
        for (std::size_t b = a + 1; b < nf; ++b)
        {
            const auto& f = out.functions[a].values;
            const auto& g = out.functions[b].values;
            bool in_run = false;
            for (std::int64_t k = 0; k < n; ++k)
            {
                const std::size_t ks = static_cast<std::size_t>(k);
                if (std::abs(f[ks] - g[ks]) > gate)
                {
                    in_run = false;
                    continue;
                }
                const double r = swap_residual(f, g, ks);
                if (r < out.jet_tol && !in_run)
                {
                    out.ambiguities.push_back({k, static_cast<std::int64_t>(a), static_cast<std::int64_t>(b), r});
                    in_run = true;
                }
            }
        }

    for (const auto& amb : out.ambiguities)
    {
        if (amb.tag_a < 0)
            continue;
        auto alt = out.functions;
        auto& f = alt[static_cast<std::size_t>(amb.tag_a)].values;
        auto& g = alt[static_cast<std::size_t>(amb.tag_b)].values;
        // Exchange from the node after the ambiguity up to the end of the sweep.
        for (std::int64_t k = amb.node + 1;; ++k)
        {
            const std::size_t ks = static_cast<std::size_t>(k % n);
            if (static_cast<std::int64_t>(ks) == start)
                break;
            std::swap(f[ks], g[ks]);
        }
        canonicalize(alt);
        out.alternative = std::move(alt);
        break;
    }
    return out;
}

SeparationResult separate_with_labels(const ArrivalCloud& cloud, const std::vector<std::int64_t>& labels)
{
    require(labels.size() == cloud.samples.size(), ErrorCode::invalid_argument,
            "separate_with_labels: one label per sample is required");
    const BoundaryGrid grid = cloud.header.grid();
    const std::int64_t n = grid.size();
    std::vector<std::int64_t> ids(labels);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    std::vector<std::vector<double>> vals(ids.size(), std::vector<double>(static_cast<std::size_t>(n), std::nan("")));
    for (std::size_t i = 0; i < labels.size(); ++i)
    {
        const auto g = static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), labels[i]) - ids.begin());
        const auto node = static_cast<std::size_t>(grid.nearest_node(cloud.samples[i].param));
        require(std::isnan(vals[g][node]), ErrorCode::constraint,
                "separate_with_labels: label " + std::to_string(labels[i]) + " has two samples on node " +
                    std::to_string(node));
        vals[g][node] = cloud.samples[i].time;
    }
    SeparationResult out;
    out.header = cloud.header;
    for (auto& v : vals)
    {
        const bool full = std::none_of(v.begin(), v.end(), [](double x) { return std::isnan(x); });
        if (full)
        {
            out.functions.push_back({std::move(v), 0});
            continue;
        }
        std::int64_t first = 0;
        while (std::isnan(v[static_cast<std::size_t>(first)]))
            ++first;
        PartialFunction pf;
        pf.start = first;
        for (std::int64_t k = first; k < n; ++k)
            pf.values.push_back(v[static_cast<std::size_t>(k)]);
        while (!pf.values.empty() && std::isnan(pf.values.back()))
            pf.values.pop_back();
        out.partials.push_back(std::move(pf));
    }
    canonicalize(out.functions);
    return out;
}

DedupeResult dedupe_spatial(const std::vector<ArrivalFunction>& functions, double const_tol)
{
    DedupeResult out;
    std::vector<std::size_t> rep_input;  // input index of each representative
    for (std::size_t i = 0; i < functions.size(); ++i)
    {
        const auto& f = functions[i].values;
        bool merged = false;
        for (std::size_t r = 0; r < rep_input.size() && !merged; ++r)
        {
            const auto& g = functions[rep_input[r]].values;
            require(f.size() == g.size(), ErrorCode::invalid_argument, "dedupe_spatial: grid size mismatch");
            double lo = inf, hi = -inf, sum = 0;
            for (std::size_t k = 0; k < f.size(); ++k)
            {
                const double d = f[k] - g[k];
                lo = std::min(lo, d);
                hi = std::max(hi, d);
                sum += d;
            }
            if (hi - lo < const_tol)
            {
                out.representative_of.push_back(r);
                out.offset.push_back(sum / static_cast<double>(f.size()));
                merged = true;
            }
        }
        if (!merged)
        {
            out.representative_of.push_back(rep_input.size());
            out.offset.push_back(0.0);
            rep_input.push_back(i);
            out.representatives.push_back(functions[i]);
        }
    }
    for (std::size_t r = 0; r < out.representatives.size(); ++r)
        out.representatives[r].source_tag = static_cast<std::int64_t>(r);
    return out;
}

AssociationReport association_accuracy(const SeparationResult& result, const std::vector<std::vector<double>>& truth,
                                       double match_tol)
{
    AssociationReport rep;
    struct Cand
    {
        double err;
        std::size_t f, t;
    };
    std::vector<Cand> cands;
    for (std::size_t f = 0; f < result.functions.size(); ++f)
        for (std::size_t t = 0; t < truth.size(); ++t)
        {
            const auto& a = result.functions[f].values;
            const auto& b = truth[t];
            require(a.size() == b.size(), ErrorCode::invalid_argument, "association_accuracy: grid size mismatch");
            double e = 0;
            for (std::size_t k = 0; k < a.size(); ++k)
                e = std::max(e, std::abs(a[k] - b[k]));
            cands.push_back({e, f, t});
        }
    std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        return a.err != b.err ? a.err < b.err : std::make_pair(a.f, a.t) < std::make_pair(b.f, b.t);
    });
    rep.matched_truth.assign(result.functions.size(), -1);
    std::vector<char> truth_used(truth.size(), 0);
    for (const auto& c : cands)
        if (rep.matched_truth[c.f] < 0 && !truth_used[c.t])
        {
            rep.matched_truth[c.f] = static_cast<std::int64_t>(c.t);
            truth_used[c.t] = 1;
        }
    for (const auto& t : truth)
        rep.samples += t.size();
    for (std::size_t f = 0; f < result.functions.size(); ++f)
    {
        if (rep.matched_truth[f] < 0)
            continue;
        const auto& a = result.functions[f].values;
        const auto& b = truth[static_cast<std::size_t>(rep.matched_truth[f])];
        for (std::size_t k = 0; k < a.size(); ++k)
            if (std::abs(a[k] - b[k]) <= match_tol)
                ++rep.correct;
    }
    rep.accuracy = rep.samples ? static_cast<double>(rep.correct) / static_cast<double>(rep.samples) : 1.0;
    return rep;
}

nlohmann::json to_json(const SeparationResult& r)
{
    using nlohmann::json;
    json j;
    j["header"] = r.header.to_json();
    j["sweep_start"] = r.sweep_start;
    j["jet_tol"] = r.jet_tol;
    j["closure_residual"] = r.closure_residual;
    json fs = json::array();
    for (const auto& f : r.functions)
        fs.push_back({{"source_tag", f.source_tag}, {"values", f.values}});
    j["functions"] = fs;
    json ps = json::array();
    for (const auto& p : r.partials)
        ps.push_back({{"start", p.start}, {"values", p.values}});
    j["partials"] = ps;
    json as = json::array();
    for (const auto& a : r.ambiguities)
        as.push_back({{"node", a.node}, {"tag_a", a.tag_a}, {"tag_b", a.tag_b}, {"swap_residual", a.swap_residual}});
    j["ambiguous"] = r.ambiguous();
    j["ambiguities"] = as;
    if (r.alternative)
    {
        json alt = json::array();
        for (const auto& f : *r.alternative)
            alt.push_back({{"source_tag", f.source_tag}, {"values", f.values}});
        j["alternative"] = alt;
    }
    return j;
}

SeparationResult separation_from_json(const nlohmann::json& j)
{
    SeparationResult r;
    try
    {
        r.header = CloudHeader::from_json(j.at("header"));
        r.sweep_start = j.value("sweep_start", std::int64_t{0});
        r.jet_tol = j.value("jet_tol", 0.0);
        r.closure_residual = j.value("closure_residual", 0.0);
        for (const auto& f : j.at("functions"))
        {
            ArrivalFunction a;
            a.source_tag = f.at("source_tag").get<std::int64_t>();
            a.values = f.at("values").get<std::vector<double>>();
            require(static_cast<std::int64_t>(a.values.size()) == r.header.grid_size, ErrorCode::constraint,
                    "functions[" + std::to_string(r.functions.size()) + "].values: length must equal grid_size");
            r.functions.push_back(std::move(a));
        }
        if (j.contains("partials"))
            for (const auto& p : j.at("partials"))
                r.partials.push_back({p.at("start").get<std::int64_t>(), p.at("values").get<std::vector<double>>()});
        if (j.contains("ambiguities"))
            for (const auto& a : j.at("ambiguities"))
                r.ambiguities.push_back({a.at("node").get<std::int64_t>(), a.at("tag_a").get<std::int64_t>(),
                                         a.at("tag_b").get<std::int64_t>(), a.at("swap_residual").get<double>()});
    }
    catch (const nlohmann::json::exception& e)
    {
        fail(ErrorCode::parse, std::string("arrival functions: ") + e.what());
    }
    return r;
}

}  // namespace lentil
