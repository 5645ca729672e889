#include "lentil.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "acceptance.hpp"
#include "lentil/constants.hpp"
#include "lentil/disentangle.hpp"
#include "lentil/error.hpp"
#include "lentil/evaluate.hpp"
#include "lentil/io.hpp"
#include "lentil/metricspace.hpp"
#include "lentil/observables.hpp"
#include "lentil/parallel.hpp"
#include "lentil/reconstruct.hpp"
#include "lentil/scene.hpp"

using nlohmann::json;

struct lentil_model
{
    lentil::ManifoldModel m;
};
struct lentil_constants
{
    lentil::GeometryConstants gc;
};
struct lentil_tolerances
{
    lentil::Tolerances t;
};
struct lentil_cloud
{
    lentil::ArrivalCloud c;
};
struct lentil_separation
{
    lentil::SeparationResult s;
};
struct lentil_space
{
    lentil::CloudHeader header;
    std::optional<lentil::DiscreteSpace> space;  // empty: no complete graph
};

namespace {

thread_local std::string last_error;

lentil_status to_status(lentil::ErrorCode c)
{
    switch (c)
    {
    case lentil::ErrorCode::invalid_argument: return LENTIL_ERR_INVALID_ARGUMENT;
    case lentil::ErrorCode::parse: return LENTIL_ERR_PARSE;
    case lentil::ErrorCode::io: return LENTIL_ERR_IO;
    case lentil::ErrorCode::solver: return LENTIL_ERR_SOLVER;
    case lentil::ErrorCode::constraint: return LENTIL_ERR_CONSTRAINT;
    case lentil::ErrorCode::degenerate: return LENTIL_ERR_DEGENERATE;
    default: return LENTIL_ERR_INTERNAL;
    }
}

template <class F>
lentil_status guarded(F&& f)
{
    try
    {
        f();
        return LENTIL_OK;
    }
    catch (const lentil::Error& e)
    {
        last_error = e.what();
        return to_status(e.code());
    }
    catch (const json::exception& e)
    {
        last_error = e.what();
        return LENTIL_ERR_PARSE;
    }
    catch (const std::bad_alloc&)
    {
        last_error = "out of memory";
        return LENTIL_ERR_INTERNAL;
    }
    catch (const std::exception& e)
    {
        last_error = e.what();
        return LENTIL_ERR_INTERNAL;
    }
}

void need(const void* p, const char* what)
{
    lentil::require(p != nullptr, lentil::ErrorCode::invalid_argument, std::string(what) + " is NULL");
}

json parse(const char* text, const char* what)
{
    if (!text)
        return json::object();
    try
    {
        return json::parse(text);
    }
    catch (const json::parse_error& e)
    {
        lentil::fail(lentil::ErrorCode::parse, std::string(what) + ": " + e.what());
    }
}

char* dup(const std::string& s)
{
    char* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (!p)
        throw std::bad_alloc();
    std::memcpy(p, s.c_str(), s.size() + 1);
    return p;
}

char* dump(const json& j) { return dup(j.dump(2) + "\n"); }

const lentil::Tolerances& tol_of(const lentil_tolerances* t)
{
    static const lentil::Tolerances defaults;
    return t ? t->t : defaults;
}

template <class T>
void read_opt(const json& j, const char* key, T& v)
{
    if (j.contains(key))
        v = j.at(key).get<T>();
}

lentil::ForwardSpec forward_spec(const json& j, std::uint64_t seed)
{
    lentil::ForwardSpec f;
    f.seed = seed;
    read_opt(j, "grid_size", f.grid_size);
    read_opt(j, "t_min", f.t_min);
    read_opt(j, "t_max", f.t_max);
    read_opt(j, "noise_amplitude", f.noise_amplitude);
    lentil::require(f.grid_size >= 8, lentil::ErrorCode::constraint, "forward: grid_size must be at least 8");
    lentil::require(f.t_max >= f.t_min, lentil::ErrorCode::constraint, "forward: t_max must be >= t_min");
    lentil::require(f.noise_amplitude >= 0, lentil::ErrorCode::constraint,
                    "forward: noise_amplitude must be non-negative");
    return f;
}

lentil::EstimateSpec estimate_spec(const json& j, std::uint64_t seed)
{
    lentil::EstimateSpec s;
    s.seed = seed;
    read_opt(j, "boundary_samples", s.boundary_samples);
    read_opt(j, "interior_samples", s.interior_samples);
    read_opt(j, "geodesic_samples", s.geodesic_samples);
    read_opt(j, "jacobi_steps", s.jacobi_steps);
    read_opt(j, "safety_factor", s.safety_factor);
    read_opt(j, "sec_plus_floor", s.sec_plus_floor);
    return s;
}

void set(lentil_verdict* v, bool pass)
{
    if (v)
        *v = pass ? LENTIL_PASS : LENTIL_FAIL;
}

}  // namespace

extern "C" {

const char* lentil_version(void) { return "1.0.0"; }

const char* lentil_last_error(void) { return last_error.c_str(); }

void lentil_string_free(char* s) { std::free(s); }

void lentil_set_threads(int n) { lentil::set_thread_cap(n); }

lentil_status lentil_read_file(const char* path, char** text)
{
    return guarded([&] {
        need(path, "path");
        need(text, "text");
        auto in = lentil::open_input(path);
        std::ostringstream ss;
        ss << in.rdbuf();
        *text = dup(ss.str());
    });
}

lentil_status lentil_write_file(const char* path, const char* text)
{
    return guarded([&] {
        need(path, "path");
        need(text, "text");
        auto out = lentil::open_output(path);
        out << text;
        lentil::require(static_cast<bool>(out), lentil::ErrorCode::io, std::string("write to '") + path + "' failed");
    });
}

lentil_status lentil_tolerances_create(const char* text, lentil_tolerances** out)
{
    return guarded([&] {
        need(out, "out");
        const auto t = text ? lentil::Tolerances::from_json(parse(text, "tolerances")) : lentil::Tolerances{};
        *out = new lentil_tolerances{t};
    });
}

lentil_status lentil_tolerances_to_json(const lentil_tolerances* t, char** out)
{
    return guarded([&] {
        need(out, "out");
        *out = dump(tol_of(t).to_json());
    });
}

void lentil_tolerances_free(lentil_tolerances* t) { delete t; }

lentil_status lentil_model_create(const char* text, lentil_model** out)
{
    return guarded([&] {
        need(text, "manifold config");
        need(out, "out");
        *out = new lentil_model{lentil::ManifoldModel::from_json(parse(text, "manifold config"))};
    });
}

lentil_status lentil_model_to_json(const lentil_model* m, char** out)
{
    return guarded([&] {
        need(m, "model");
        need(out, "out");
        *out = dump(m->m.to_json());
    });
}

lentil_status lentil_model_distance(const lentil_model* m, double px, double py, double qx, double qy, double* out)
{
    return guarded([&] {
        need(m, "model");
        need(out, "out");
        *out = m->m.distance({px, py}, {qx, qy});
    });
}

void lentil_model_free(lentil_model* m) { delete m; }

lentil_status lentil_constants_create(const char* text, lentil_constants** out)
{
    return guarded([&] {
        need(text, "constants");
        need(out, "out");
        *out = new lentil_constants{lentil::derive(lentil::FundamentalConstants::from_json(parse(text, "constants")))};
    });
}

lentil_status lentil_constants_estimate(const lentil_model* m, const char* spec, uint64_t seed,
                                        lentil_constants** out)
{
    return guarded([&] {
        need(m, "model");
        need(out, "out");
        const auto fc = lentil::estimate(m->m, estimate_spec(parse(spec, "estimate options"), seed));
        *out = new lentil_constants{lentil::derive(fc)};
    });
}

lentil_status lentil_constants_to_json(const lentil_constants* c, char** out)
{
    return guarded([&] {
        need(c, "constants");
        need(out, "out");
        *out = dump(c->gc.to_json());
    });
}

void lentil_constants_free(lentil_constants* c) { delete c; }

lentil_status lentil_simulate(const lentil_model* m, const char* scene, const char* forward, uint64_t seed,
                              const char* truth_path, lentil_cloud** out)
{
    return guarded([&] {
        need(m, "model");
        need(scene, "scene");
        need(out, "out");
        const auto sources = lentil::sources_from_json(m->m, parse(scene, "scene"), seed);
        const auto cloud = lentil::forward(m->m, sources, forward_spec(parse(forward, "forward options"), seed));
        if (truth_path)
            lentil::write_truth(truth_path, sources);
        *out = new lentil_cloud{cloud};
    });
}

lentil_status lentil_cloud_read(const char* path, lentil_cloud** out)
{
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new lentil_cloud{lentil::read_cloud(path)};
    });
}

lentil_status lentil_cloud_write(const lentil_cloud* c, const char* path)
{
    return guarded([&] {
        need(c, "cloud");
        need(path, "path");
        lentil::write_cloud(path, c->c);
    });
}

lentil_status lentil_cloud_info(const lentil_cloud* c, char** out)
{
    return guarded([&] {
        need(c, "cloud");
        need(out, "out");
        *out = dump({{"header", c->c.header.to_json()}, {"samples", c->c.samples.size()}});
    });
}

void lentil_cloud_free(lentil_cloud* c) { delete c; }

lentil_status lentil_disentangle(const lentil_cloud* c, const lentil_tolerances* t, lentil_separation** out)
{
    return guarded([&] {
        need(c, "cloud");
        need(out, "out");
        *out = new lentil_separation{lentil::separate(c->c, tol_of(t))};
    });
}

lentil_status lentil_separation_to_json(const lentil_separation* s, char** out)
{
    return guarded([&] {
        need(s, "separation");
        need(out, "out");
        *out = dump(lentil::to_json(s->s));
    });
}

lentil_status lentil_separation_from_json(const char* text, lentil_separation** out)
{
    return guarded([&] {
        need(text, "separation");
        need(out, "out");
        *out = new lentil_separation{lentil::separation_from_json(parse(text, "separation"))};
    });
}

lentil_status lentil_separation_write_csv(const lentil_separation* s, const char* path)
{
    return guarded([&] {
        need(s, "separation");
        need(path, "path");
        const auto grid = s->s.header.grid();
        std::vector<std::vector<double>> rows;
        for (std::size_t f = 0; f < s->s.functions.size(); ++f)
        {
            const auto& v = s->s.functions[f].values;
            for (std::size_t k = 0; k < v.size(); ++k)
                rows.push_back({static_cast<double>(k), grid.param(static_cast<std::int64_t>(k)),
                                static_cast<double>(f), v[k]});
        }
        lentil::write_csv(path, {"node", "boundary_param", "function", "time"}, rows);
    });
}

void lentil_separation_free(lentil_separation* s) { delete s; }

lentil_status lentil_observables(const lentil_separation* s, const lentil_tolerances* t, lentil_space** out)
{
    return guarded([&] {
        need(s, "separation");
        need(out, "out");
        const auto& tol = tol_of(t);
        auto sp = std::make_unique<lentil_space>();
        sp->header = s->s.header;
        if (!s->s.functions.empty())
        {
            const auto dd =
                lentil::dedupe_spatial(s->s.functions, tol.const_tol_factor * lentil::data_tol_dist(s->s.header, tol));
            sp->space = lentil::DiscreteSpace::assemble(dd.representatives, s->s.header, tol);
        }
        *out = sp.release();
    });
}

lentil_status lentil_space_to_json(const lentil_space* s, char** out)
{
    return guarded([&] {
        need(s, "space");
        need(out, "out");
        if (s->space)
            *out = dump(s->space->to_json());
        else
            *out = dump({{"n", 0}, {"header", s->header.to_json()}});
    });
}

lentil_status lentil_space_from_json(const char* text, lentil_space** out)
{
    return guarded([&] {
        need(text, "space");
        need(out, "out");
        const auto j = parse(text, "space");
        auto sp = std::make_unique<lentil_space>();
        if (j.value("n", std::size_t{1}) == 0)
            sp->header = lentil::CloudHeader::from_json(j.at("header"));
        else
        {
            sp->space = lentil::DiscreteSpace::from_json(j);
            sp->header = sp->space->header();
        }
        *out = sp.release();
    });
}

lentil_status lentil_space_size(const lentil_space* s, size_t* n)
{
    return guarded([&] {
        need(s, "space");
        need(n, "n");
        *n = s->space ? s->space->size() : 0;
    });
}

lentil_status lentil_space_write_dd_csv(const lentil_space* s, const size_t* pairs, size_t npairs, const char* path)
{
    return guarded([&] {
        need(s, "space");
        need(path, "path");
        lentil::require(npairs == 0 || pairs, lentil::ErrorCode::invalid_argument, "pairs is NULL");
        lentil::require(s->space.has_value(), lentil::ErrorCode::invalid_argument, "space is empty");
        std::vector<std::pair<std::size_t, std::size_t>> p;
        for (size_t i = 0; i < npairs; ++i)
            p.emplace_back(pairs[2 * i], pairs[2 * i + 1]);
        s->space->write_dd_csv(path, p);
    });
}

void lentil_space_free(lentil_space* s) { delete s; }

lentil_status lentil_reconstruct(const lentil_space* s, const lentil_constants* c, const lentil_tolerances* t,
                                 double epsilon1, int sweep, char** out, lentil_verdict* verdict)
{
    return guarded([&] {
        need(s, "space");
        need(c, "constants");
        need(out, "out");
        const auto& tol = tol_of(t);
        lentil::ReconstructReport rep;
        if (!s->space)
            rep = lentil::one_point_report(c->gc, s->header.grid(), "no complete arrival graph");
        else
        {
            const auto prox = lentil::proximity(*s->space, c->gc, tol);
            rep = sweep ? lentil::reconstruct_sweep(*s->space, prox, c->gc, tol)
                        : lentil::reconstruct(*s->space, prox, c->gc, epsilon1, tol);
        }
        *out = dump(rep.to_json());
        set(verdict, rep.status != lentil::ReconstructStatus::not_certified);
    });
}

lentil_status lentil_window(const lentil_cloud* cl, const lentil_constants* c, const lentil_tolerances* t,
                            const double* t_list, size_t n, char** out)
{
    return guarded([&] {
        need(cl, "cloud");
        need(c, "constants");
        need(out, "out");
        lentil::require(n == 0 || t_list, lentil::ErrorCode::invalid_argument, "t_list is NULL");
        const auto ws = lentil::window_reconstruct(cl->c, std::vector<double>(t_list, t_list + n), c->gc, tol_of(t));
        json arr = json::array();
        for (const auto& w : ws)
        {
            json r = w.result.report.to_json();
            arr.push_back({{"T", w.t},
                           {"samples", w.samples},
                           {"complete_graphs", w.complete_graphs},
                           {"points", w.result.space ? w.result.space->size() : 0},
                           {"report", r}});
        }
        *out = dump({{"windows", arr}});
    });
}

lentil_status lentil_lgh(const char* x_json, const char* y_json, char** out)
{
    return guarded([&] {
        need(x_json, "first space");
        need(y_json, "second space");
        need(out, "out");
        const auto x = lentil::LabeledMetricSpace::from_json(parse(x_json, "first space"));
        const auto y = lentil::LabeledMetricSpace::from_json(parse(y_json, "second space"));
        *out = dump(lentil::lgh_bounds(x, y).to_json());
    });
}

lentil_status lentil_evaluate(const lentil_model* m, const lentil_cloud* cl, const char* truth_path,
                              const lentil_constants* c, const lentil_tolerances* t, const char* options, uint64_t seed,
                              char** out, lentil_verdict* verdict)
{
    return guarded([&] {
        need(m, "model");
        need(cl, "cloud");
        need(truth_path, "truth path");
        need(c, "constants");
        need(out, "out");
        const auto opt = parse(options, "evaluate options");
        lentil::EvaluateSpec spec;
        spec.seed = seed;
        read_opt(opt, "density_samples", spec.density_samples);
        read_opt(opt, "lgh_samples", spec.lgh_samples);
        if (opt.contains("epsilon1") && !opt["epsilon1"].is_null())
            spec.epsilon1 = opt["epsilon1"].get<double>();

        const auto truth = lentil::read_truth(truth_path);
        const auto ev = lentil::evaluate_scene(cl->c, truth, m->m, c->gc, tol_of(t), spec);
        json j = {{"scene", ev.to_json()}};
        bool pass = ev.pass();

        if (opt.contains("reverse"))
        {
            const auto& r = opt["reverse"];
            lentil::ReverseSpec rs;
            rs.seed = seed;
            read_opt(r, "epsilon", rs.epsilon);
            read_opt(r, "density_samples", rs.density_samples);
            read_opt(r, "pair_samples", rs.pair_samples);
            read_opt(r, "fine_grid", rs.fine_grid);
            std::vector<lentil::Vec2> pts;
            for (const auto& s : truth)
                pts.push_back(s.position);
            const auto rep = lentil::reverse_check(m->m, lentil::ExplicitPointSet(pts), c->gc, rs);
            j["reverse"] = rep.to_json();
            pass = pass && rep.status != "FAIL";
        }
        if (opt.contains("lentils"))
        {
            const auto& l = opt["lentils"];
            lentil::LentilGeometrySpec ls;
            ls.seed = seed;
            read_opt(l, "lentils", ls.lentils);
            read_opt(l, "cover_points", ls.cover_points);
            read_opt(l, "epsilon1", ls.epsilon1);
            read_opt(l, "epsilon2", ls.epsilon2);
            const auto rep = lentil::lentil_geometry_checks(m->m, c->gc, ls);
            j["lentil_geometry"] = rep.to_json();
            pass = pass && rep.pass();
        }
        j["pass"] = pass;
        *out = dump(j);
        set(verdict, pass);
    });
}

lentil_status lentil_selftest(const char* options, lentil_line_callback cb, void* user, char** out,
                              lentil_verdict* verdict)
{
    return guarded([&] {
        const auto opt = lentil::acceptance::options_from_json(parse(options, "selftest options"));
        const auto rs = lentil::acceptance::run_suite(opt, [&](const lentil::acceptance::CriterionResult& r) {
            if (cb)
                cb(lentil::acceptance::format_line(r).c_str(), user);
        });
        bool pass = true;
        for (const auto& r : rs)
            pass = pass && r.pass;
        if (out)
            *out = dump(lentil::acceptance::to_json(rs));
        set(verdict, pass);
    });
}

}  // extern "C"
