#include "lentil/scene.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss.hpp>

#include "lentil/error.hpp"
#include "lentil/io.hpp"

namespace lentil {

namespace {

double volume_density(const ManifoldModel& m, Vec2 p)
{
    const double c = m.speed(p).v;
    return 1.0 / (c * c);
}

// Max of f over a polar sample of the disk, and its min.
template <class F>
std::pair<double, double> polar_range(const ManifoldModel& m, F f)
{
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    const int nr = 48, na = 96;
    for (int i = 0; i <= nr; ++i)
    {
        const double r = m.radius() * i / nr;
        for (int k = 0; k < (i == 0 ? 1 : na); ++k)
        {
            const double v = f(unit_from_angle(two_pi * k / na) * r);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    return {lo, hi};
}

double json_number(const nlohmann::json& j, const char* key, const std::string& where)
{
    if (!j.contains(key))
        fail(ErrorCode::parse, where + ": missing field '" + key + "'");
    if (!j.at(key).is_number())
        fail(ErrorCode::parse, where + ": field '" + key + "' must be a number");
    return j.at(key).get<double>();
}

}  // namespace

SourceDensity SourceDensity::expression(const std::string& expr)
{
    return {make_expression_speed(expr)};
}

double riemannian_volume(const ManifoldModel& model)
{
    using boost::math::quadrature::gauss;
    const double R = model.radius();
    const int na = 64;
    double total = 0.0;
    for (int k = 0; k < na; ++k)
    {
        const double th = two_pi * (k + 0.5) / na;
        total += gauss<double, 20>::integrate(
            [&](double r) { return r * volume_density(model, unit_from_angle(th) * r); }, 0.0, R);
    }
    return total * two_pi / na;
}

std::vector<SpacetimeSource> poisson_sources(const ManifoldModel& model, const PoissonSpec& spec,
                                             std::uint64_t seed)
{
    require(spec.intensity > 0 && std::isfinite(spec.intensity), ErrorCode::invalid_argument,
            "poisson_sources: intensity must be positive");
    require(spec.t_max >= spec.t_min && std::isfinite(spec.t_max) && std::isfinite(spec.t_min),
            ErrorCode::invalid_argument, "poisson_sources: window must satisfy t_min <= t_max");
    require(spec.margin_rel >= 0 && spec.margin_rel < 0.5, ErrorCode::invalid_argument,
            "poisson_sources: margin_rel must lie in [0, 0.5)");

    double w_hi = 1.0;
    if (spec.density.weight)
    {
        const auto [lo, hi] = polar_range(model, [&](Vec2 p) { return spec.density.weight->eval(p).v; });
        require(std::isfinite(lo) && std::isfinite(hi) && lo > 0, ErrorCode::constraint,
                "poisson_sources: density is not comparable to the volume (ratio zero or unbounded on the disk)");
        w_hi = hi * 1.05;
    }
    const double g_hi = polar_range(model, [&](Vec2 p) { return volume_density(model, p); }).second * 1.05;

    std::mt19937_64 rng(seed);
    const double mean = spec.intensity * riemannian_volume(model) * (spec.t_max - spec.t_min);
    std::size_t count = 0;
    if (mean > 0)
        count = static_cast<std::size_t>(std::poisson_distribution<long long>(mean)(rng));

    const double margin = spec.margin_rel * model.diameter();
    const double R = model.radius();
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<SpacetimeSource> out;
    out.reserve(count);
    std::size_t attempts = 0;
    // Events inside the margin are drawn and then dropped: thinning keeps
    // the process Poisson on the rest of the disk.
    for (std::size_t placed = 0; placed < count;)
    {
        require(++attempts < 1000000 + 1000 * count, ErrorCode::internal,
                "poisson_sources: rejection sampler made no progress");
        const Vec2 p(R * (2 * u01(rng) - 1), R * (2 * u01(rng) - 1));
        const double accept = u01(rng);
        if (norm2(p) >= R * R)
            continue;
        double w = volume_density(model, p) / g_hi;
        if (spec.density.weight)
            w *= spec.density.weight->eval(p).v / w_hi;
        if (accept >= w)
            continue;
        ++placed;
        const double t = spec.t_min + (spec.t_max - spec.t_min) * u01(rng);
        if (margin > 0 && model.distance_to_boundary(p) < margin)
            continue;
        SpacetimeSource s;
        s.position = p;
        s.time = t;
        s.id = static_cast<std::int64_t>(out.size());
        out.push_back(s);
    }
    return out;
}

ArrivalCloud forward(const ManifoldModel& model, const std::vector<SpacetimeSource>& sources,
                     const ForwardSpec& spec)
{
    require(spec.grid_size >= 8, ErrorCode::invalid_argument, "forward: grid_size must be at least 8");
    require(spec.t_max >= spec.t_min, ErrorCode::invalid_argument, "forward: empty window");
    require(spec.noise_amplitude >= 0, ErrorCode::invalid_argument, "forward: negative noise amplitude");
    for (const auto& s : sources)
        require(norm(s.position) < model.radius() && std::isfinite(s.time), ErrorCode::invalid_argument,
                "forward: source " + std::to_string(s.id) + " is not strictly interior");
    for (std::size_t i = 0; i < sources.size(); ++i)
        for (std::size_t j = i + 1; j < sources.size(); ++j)
            require(!(sources[i].position == sources[j].position && sources[i].time == sources[j].time),
                    ErrorCode::invalid_argument,
                    "forward: sources " + std::to_string(sources[i].id) + " and " + std::to_string(sources[j].id) +
                        " coincide in spacetime");

    const BoundaryGrid grid = model.grid(spec.grid_size);
    ArrivalCloud cloud;
    cloud.header.grid_size = spec.grid_size;
    cloud.header.boundary_length = model.boundary_length();
    cloud.header.t_min = spec.t_min;
    cloud.header.t_max = spec.t_max;
    cloud.header.manifold_hash = model.hash_hex();
    cloud.header.seed = spec.seed;
    cloud.header.noise_amplitude = spec.noise_amplitude;

    std::vector<std::vector<double>> rp(sources.size());
    for (std::size_t i = 0; i < sources.size(); ++i)
        rp[i] = model.boundary_distance_function(sources[i].position, grid);

    for (std::size_t i = 0; i < sources.size(); ++i)
        for (std::int64_t k = 0; k < grid.size(); ++k)
        {
            const double t = sources[i].time + rp[i][static_cast<std::size_t>(k)];
            if (t >= spec.t_min && t <= spec.t_max)
                cloud.samples.push_back({grid.param(k), t});
        }

    std::mt19937_64 rng(spec.seed);
    std::shuffle(cloud.samples.begin(), cloud.samples.end(), rng);
    if (spec.noise_amplitude > 0)
    {
        std::uniform_real_distribution<double> noise(-spec.noise_amplitude, spec.noise_amplitude);
        for (auto& s : cloud.samples)
            s.time += noise(rng);
    }
    return cloud;
}

std::vector<SpacetimeSource> sources_from_json(const ManifoldModel& model, const nlohmann::json& j,
                                               std::uint64_t seed)
{
    if (j.contains("sources"))
    {
        require(j.at("sources").is_array(), ErrorCode::parse, "scene: 'sources' must be an array");
        std::vector<SpacetimeSource> out;
        for (const auto& e : j.at("sources"))
        {
            const std::string where = "scene: sources[" + std::to_string(out.size()) + "]";
            SpacetimeSource s;
            s.position = Vec2(json_number(e, "x", where), json_number(e, "y", where));
            s.time = json_number(e, "tau", where);
            s.id = e.contains("id") ? e.at("id").get<std::int64_t>() : static_cast<std::int64_t>(out.size());
            require(norm(s.position) < model.radius(), ErrorCode::constraint,
                    where + ": position must be strictly inside the disk");
            out.push_back(s);
        }
        return out;
    }
    if (j.contains("poisson"))
    {
        const auto& p = j.at("poisson");
        PoissonSpec spec;
        spec.intensity = json_number(p, "intensity", "scene.poisson");
        if (p.contains("T"))
        {
            spec.t_min = 0.0;
            spec.t_max = json_number(p, "T", "scene.poisson");
        }
        else
        {
            spec.t_min = json_number(p, "t_min", "scene.poisson");
            spec.t_max = json_number(p, "t_max", "scene.poisson");
        }
        if (p.contains("density"))
        {
            require(p.at("density").is_string(), ErrorCode::parse, "scene.poisson: 'density' must be an expression string");
            spec.density = SourceDensity::expression(p.at("density").get<std::string>());
        }
        if (p.contains("margin_rel"))
            spec.margin_rel = json_number(p, "margin_rel", "scene.poisson");
        if (spec.t_max == spec.t_min)
            return {};
        return poisson_sources(model, spec, seed);
    }
    fail(ErrorCode::parse, "scene: expected a 'sources' array or a 'poisson' object");
}

nlohmann::json CloudHeader::to_json() const
{
    nlohmann::json j;
    j["grid_size"] = grid_size;
    j["boundary_length"] = boundary_length;
    j["window"] = {t_min, std::isfinite(t_max) ? nlohmann::json(t_max) : nlohmann::json(nullptr)};
    j["manifold_hash"] = manifold_hash;
    j["seed"] = seed;
    j["noise_amplitude"] = noise_amplitude;
    return j;
}

CloudHeader CloudHeader::from_json(const nlohmann::json& j)
{
    const std::string where = "cloud header";
    CloudHeader h;
    require(j.contains("grid_size") && j.at("grid_size").is_number_integer(), ErrorCode::parse,
            where + ": 'grid_size' must be an integer");
    h.grid_size = j.at("grid_size").get<std::int64_t>();
    require(h.grid_size >= 8, ErrorCode::constraint, where + ": 'grid_size' must be at least 8");
    h.boundary_length = json_number(j, "boundary_length", where);
    require(h.boundary_length > 0, ErrorCode::constraint, where + ": 'boundary_length' must be positive");
    require(j.contains("window") && j.at("window").is_array() && j.at("window").size() == 2, ErrorCode::parse,
            where + ": 'window' must be [t_min, t_max]");
    h.t_min = j.at("window")[0].get<double>();
    h.t_max = j.at("window")[1].is_null() ? std::numeric_limits<double>::infinity() : j.at("window")[1].get<double>();
    if (j.contains("manifold_hash"))
        h.manifold_hash = j.at("manifold_hash").get<std::string>();
    if (j.contains("seed"))
        h.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("noise_amplitude"))
        h.noise_amplitude = json_number(j, "noise_amplitude", where);
    return h;
}

std::string cloud_header_path(const std::string& csv_path)
{
    const auto dot = csv_path.rfind('.');
    const auto slash = csv_path.find_last_of('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return csv_path + ".json";
    return csv_path.substr(0, dot) + ".json";
}

void write_cloud(const std::string& csv_path, const ArrivalCloud& cloud)
{
    std::vector<std::vector<double>> rows;
    rows.reserve(cloud.samples.size());
    for (const auto& s : cloud.samples)
        rows.push_back({s.param, s.time});
    write_csv(csv_path, {"boundary_param", "time"}, rows);
    write_json(cloud_header_path(csv_path), cloud.header.to_json());
}

ArrivalCloud read_cloud(const std::string& csv_path)
{
    ArrivalCloud c;
    c.header = CloudHeader::from_json(read_json(cloud_header_path(csv_path)));
    const auto t = read_csv(csv_path);
    const auto ip = t.column("boundary_param", csv_path);
    const auto it = t.column("time", csv_path);
    c.samples.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i)
    {
        const double p = t.rows[i][ip], tm = t.rows[i][it];
        require(p >= 0 && p < c.header.boundary_length * (1 + 1e-12), ErrorCode::constraint,
                csv_path + ":" + std::to_string(i + 2) + ": boundary_param outside [0, boundary_length)");
        require(std::isfinite(tm), ErrorCode::constraint,
                csv_path + ":" + std::to_string(i + 2) + ": time must be finite");
        c.samples.push_back({p, tm});
    }
    return c;
}

void write_truth(const std::string& path, const std::vector<SpacetimeSource>& sources)
{
    std::vector<std::vector<double>> rows;
    for (const auto& s : sources)
        rows.push_back({static_cast<double>(s.id), s.position.x, s.position.y, s.time});
    write_csv(path, {"id", "x", "y", "tau"}, rows);
}

std::vector<SpacetimeSource> read_truth(const std::string& path)
{
    const auto t = read_csv(path);
    const auto ii = t.column("id", path), ix = t.column("x", path), iy = t.column("y", path),
               it = t.column("tau", path);
    std::vector<SpacetimeSource> out;
    for (const auto& r : t.rows)
        out.push_back({Vec2(r[ix], r[iy]), r[it], static_cast<std::int64_t>(r[ii])});
    return out;
}

}  // namespace lentil
