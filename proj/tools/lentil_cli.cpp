// Batch front end. Everything below goes through lentil.h; file access too,
// so the audit trail sees every path a command touches.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "lentil.h"

using nlohmann::json;

namespace {

struct Failure
{
    std::string message;
};

[[noreturn]] void die(const std::string& msg) { throw Failure{msg}; }

// Turns a failed status into a diagnostic; `what` names the file or object.
void check(lentil_status st, const std::string& what)
{
    if (st != LENTIL_OK)
        die(what + ": " + lentil_last_error());
}

struct Str
{
    char* p = nullptr;
    ~Str() { lentil_string_free(p); }
    std::string str() const { return p ? p : ""; }
};

template <class T, void (*F)(T*)>
struct Del
{
    void operator()(T* p) const { F(p); }
};
using Model = std::unique_ptr<lentil_model, Del<lentil_model, lentil_model_free>>;
using Consts = std::unique_ptr<lentil_constants, Del<lentil_constants, lentil_constants_free>>;
using Tols = std::unique_ptr<lentil_tolerances, Del<lentil_tolerances, lentil_tolerances_free>>;
using Cloud = std::unique_ptr<lentil_cloud, Del<lentil_cloud, lentil_cloud_free>>;
using Sep = std::unique_ptr<lentil_separation, Del<lentil_separation, lentil_separation_free>>;
using Space = std::unique_ptr<lentil_space, Del<lentil_space, lentil_space_free>>;

std::string read_text(const std::string& path)
{
    Str s;
    check(lentil_read_file(path.c_str(), &s.p), path);
    return s.str();
}

void emit(const std::string& out, const std::string& text)
{
    if (out.empty() || out == "-")
        std::cout << text << std::flush;
    else
        check(lentil_write_file(out.c_str(), text.c_str()), out);
}

struct Globals
{
    std::uint64_t seed = 1;
    int threads = 0;
    std::string config;  // tolerances JSON
};

Tols load_tolerances(const Globals& g)
{
    lentil_tolerances* t = nullptr;
    if (g.config.empty())
        check(lentil_tolerances_create(nullptr, &t), "default tolerances");
    else
        check(lentil_tolerances_create(read_text(g.config).c_str(), &t), g.config);
    return Tols(t);
}

Model load_model(const std::string& path)
{
    lentil_model* m = nullptr;
    check(lentil_model_create(read_text(path).c_str(), &m), path);
    return Model(m);
}

Cloud load_cloud(const std::string& path)
{
    lentil_cloud* c = nullptr;
    check(lentil_cloud_read(path.c_str(), &c), path);
    return Cloud(c);
}

// Either a constants file or an estimate from a manifold config.
struct ConstantsArgs
{
    std::string file;
    bool estimate = false;
    std::string manifold;
    std::string estimate_options;

    void add(CLI::App* app, bool with_manifold)
    {
        auto* f = app->add_option("--constants", file, "constants JSON file")->check(CLI::ExistingFile);
        auto* e = app->add_flag("--estimate", estimate, "estimate constants from --manifold");
        f->excludes(e);
        if (with_manifold)
            app->add_option("--manifold", manifold, "manifold config JSON")->check(CLI::ExistingFile);
        app->add_option("--estimate-options", estimate_options, "estimation options JSON")
            ->check(CLI::ExistingFile);
    }

    Consts load(const Globals& g) const
    {
        lentil_constants* c = nullptr;
        if (!file.empty())
        {
            check(lentil_constants_create(read_text(file).c_str(), &c), file);
            return Consts(c);
        }
        if (!estimate)
            die("constants: one of --constants FILE or --estimate is required");
        if (manifold.empty())
            die("constants: --estimate needs --manifold");
        const auto m = load_model(manifold);
        const std::string opts = estimate_options.empty() ? "{}" : read_text(estimate_options);
        check(lentil_constants_estimate(m.get(), opts.c_str(), g.seed, &c),
              estimate_options.empty() ? manifold : estimate_options);
        return Consts(c);
    }
};

int verdict_code(lentil_verdict v) { return v == LENTIL_PASS ? 0 : 2; }

// ---- simulate

struct SimulateArgs
{
    std::string manifold, scene, out, truth;
    int grid = 1024;
    std::optional<double> t_min, t_max;
    double noise = 0.0;
};

int run_simulate(const Globals& g, const SimulateArgs& a)
{
    const auto m = load_model(a.manifold);
    const std::string scene = read_text(a.scene);
    json fwd = {{"grid_size", a.grid}, {"noise_amplitude", a.noise}};
    if (a.t_min)
        fwd["t_min"] = *a.t_min;
    if (a.t_max)
        fwd["t_max"] = *a.t_max;
    std::string truth = a.truth;
    if (truth.empty())
    {
        const auto dot = a.out.rfind('.');
        const auto slash = a.out.find_last_of('/');
        const bool ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
        truth = (ext ? a.out.substr(0, dot) : a.out) + ".truth.csv";
    }
    lentil_cloud* c = nullptr;
    check(lentil_simulate(m.get(), scene.c_str(), fwd.dump().c_str(), g.seed, truth.c_str(), &c), a.scene);
    Cloud cloud(c);
    check(lentil_cloud_write(cloud.get(), a.out.c_str()), a.out);
    Str info;
    check(lentil_cloud_info(cloud.get(), &info.p), a.out);
    std::cerr << "simulate: " << json::parse(info.str())["samples"] << " samples -> " << a.out << ", truth -> "
              << truth << "\n";
    return 0;
}

// ---- disentangle

struct DisentangleArgs
{
    std::string cloud, out, graphs_csv;
};

int run_disentangle(const Globals& g, const DisentangleArgs& a)
{
    const auto tol = load_tolerances(g);
    const auto cloud = load_cloud(a.cloud);
    lentil_separation* s = nullptr;
    check(lentil_disentangle(cloud.get(), tol.get(), &s), a.cloud);
    Sep sep(s);
    Str js;
    check(lentil_separation_to_json(sep.get(), &js.p), "separation");
    emit(a.out, js.str());
    if (!a.graphs_csv.empty())
        check(lentil_separation_write_csv(sep.get(), a.graphs_csv.c_str()), a.graphs_csv);
    return 0;
}

// ---- observables

struct ObservablesArgs
{
    std::string functions, out, dd_csv;
    std::vector<std::string> dd_pairs;  // "r:s"
};

std::vector<size_t> parse_pairs(const std::vector<std::string>& items, size_t n)
{
    std::vector<size_t> flat;
    for (const auto& it : items)
    {
        const auto colon = it.find(':');
        size_t r = 0, s = 0;
        try
        {
            if (colon == std::string::npos)
                throw std::invalid_argument(it);
            r = std::stoul(it.substr(0, colon));
            s = std::stoul(it.substr(colon + 1));
        }
        catch (const std::exception&)
        {
            die("--dd-pairs: '" + it + "' is not of the form r:s");
        }
        if (r >= n || s >= n)
            die("--dd-pairs: '" + it + "' indexes past the " + std::to_string(n) + " recovered points");
        flat.push_back(r);
        flat.push_back(s);
    }
    if (items.empty())
        for (size_t s = 1; s < n; ++s)
            flat.push_back(0), flat.push_back(s);
    return flat;
}

int run_observables(const Globals& g, const ObservablesArgs& a)
{
    const auto tol = load_tolerances(g);
    lentil_separation* s = nullptr;
    check(lentil_separation_from_json(read_text(a.functions).c_str(), &s), a.functions);
    Sep sep(s);
    lentil_space* sp = nullptr;
    check(lentil_observables(sep.get(), tol.get(), &sp), a.functions);
    Space space(sp);
    Str js;
    check(lentil_space_to_json(space.get(), &js.p), "space");
    emit(a.out, js.str());
    if (!a.dd_csv.empty())
    {
        size_t n = 0;
        check(lentil_space_size(space.get(), &n), "space");
        if (n == 0)
            die(a.dd_csv + ": no recovered points, nothing to write");
        const auto pairs = parse_pairs(a.dd_pairs, n);
        check(lentil_space_write_dd_csv(space.get(), pairs.data(), pairs.size() / 2, a.dd_csv.c_str()), a.dd_csv);
    }
    return 0;
}

// ---- reconstruct

struct ReconstructArgs
{
    std::string space, out;
    ConstantsArgs constants;
    std::optional<double> eps1;
    bool sweep = false;
};

int run_reconstruct(const Globals& g, const ReconstructArgs& a)
{
    if (!a.eps1 && !a.sweep)
        die("one of --eps1 VALUE or --sweep-eps1 is required");
    const auto tol = load_tolerances(g);
    const auto c = a.constants.load(g);
    lentil_space* sp = nullptr;
    check(lentil_space_from_json(read_text(a.space).c_str(), &sp), a.space);
    Space space(sp);
    Str rep;
    lentil_verdict v = LENTIL_FAIL;
    check(lentil_reconstruct(space.get(), c.get(), tol.get(), a.eps1.value_or(0.0), a.sweep ? 1 : 0, &rep.p, &v),
          a.space);
    emit(a.out, rep.str());
    return verdict_code(v);
}

// ---- window

struct WindowArgs
{
    std::string cloud, out, curve_csv;
    std::vector<double> t_list;
    ConstantsArgs constants;
};

std::string number_or_inf(const json& v)
{
    if (v.is_number())
    {
        std::ostringstream ss;
        ss.precision(17);
        ss << v.get<double>();
        return ss.str();
    }
    return "inf";
}

int run_window(const Globals& g, const WindowArgs& a)
{
    const auto tol = load_tolerances(g);
    const auto c = a.constants.load(g);
    const auto cloud = load_cloud(a.cloud);
    Str js;
    check(lentil_window(cloud.get(), c.get(), tol.get(), a.t_list.data(), a.t_list.size(), &js.p), a.cloud);
    emit(a.out, js.str());
    const auto j = json::parse(js.str());
    bool pass = true;
    std::ostringstream csv;
    csv << "T,samples,points,status,epsilon_bound,lgh_bound\n";
    for (const auto& w : j["windows"])
    {
        const auto& r = w["report"];
        pass = pass && r["status"] != "NOT-CERTIFIED";
        csv << number_or_inf(w["T"]) << "," << w["samples"] << "," << r["points"] << ","
            << r["status"].get<std::string>() << "," << number_or_inf(r["epsilon_bound"]) << ","
            << number_or_inf(r["lgh_bound"]) << "\n";
    }
    if (!a.curve_csv.empty())
        check(lentil_write_file(a.curve_csv.c_str(), csv.str().c_str()), a.curve_csv);
    return pass ? 0 : 2;
}

// ---- constants

struct ConstantsCmdArgs
{
    ConstantsArgs constants;
    std::string out;
};

int run_constants(const Globals& g, const ConstantsCmdArgs& a)
{
    const auto c = a.constants.load(g);
    Str js;
    check(lentil_constants_to_json(c.get(), &js.p), "constants");
    emit(a.out, js.str());
    return 0;
}

// ---- evaluate

struct EvaluateArgs
{
    std::string manifold, cloud, truth, out;
    ConstantsArgs constants;
    std::optional<double> eps1;
    std::optional<std::size_t> density_samples, lgh_samples;
    std::optional<double> reverse_eps;
    std::optional<std::size_t> lentils, cover_points;
};

int run_evaluate(const Globals& g, const EvaluateArgs& a)
{
    const auto tol = load_tolerances(g);
    auto ca = a.constants;
    ca.manifold = a.manifold;
    const auto c = ca.load(g);
    const auto m = load_model(a.manifold);
    const auto cloud = load_cloud(a.cloud);
    json opt = json::object();
    if (a.eps1)
        opt["epsilon1"] = *a.eps1;
    if (a.density_samples)
        opt["density_samples"] = *a.density_samples;
    if (a.lgh_samples)
        opt["lgh_samples"] = *a.lgh_samples;
    if (a.reverse_eps)
        opt["reverse"] = {{"epsilon", *a.reverse_eps}};
    if (a.lentils || a.cover_points)
    {
        opt["lentils"] = json::object();
        if (a.lentils)
            opt["lentils"]["lentils"] = *a.lentils;
        if (a.cover_points)
            opt["lentils"]["cover_points"] = *a.cover_points;
    }
    Str js;
    lentil_verdict v = LENTIL_FAIL;
    check(lentil_evaluate(m.get(), cloud.get(), a.truth.c_str(), c.get(), tol.get(), opt.dump().c_str(), g.seed,
                          &js.p, &v),
          a.truth);
    emit(a.out, js.str());
    return verdict_code(v);
}

// ---- lgh

struct LghArgs
{
    std::string x, y, out;
};

int run_lgh(const Globals&, const LghArgs& a)
{
    const std::string x = read_text(a.x), y = read_text(a.y);
    Str js;
    check(lentil_lgh(x.c_str(), y.c_str(), &js.p), a.x + " vs " + a.y);
    emit(a.out, js.str());
    return 0;
}

// ---- selftest

struct SelftestArgs
{
    std::vector<std::string> only;
    std::string out;
    bool seed_given = false;
};

int run_selftest(const Globals& g, const SelftestArgs& a)
{
    json opt = json::object();
    if (!a.only.empty())
        opt["only"] = a.only;
    if (a.seed_given)
        opt["seed"] = g.seed;
    Str js;
    lentil_verdict v = LENTIL_FAIL;
    auto print = [](const char* line, void*) { std::cout << line << "\n" << std::flush; };
    check(lentil_selftest(opt.dump().c_str(), print, nullptr, &js.p, &v), "selftest");
    if (!a.out.empty())
        emit(a.out, js.str());
    std::cout << (v == LENTIL_PASS ? "selftest: all criteria PASS" : "selftest: some criteria FAIL") << "\n";
    return verdict_code(v);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Boundary arrival-time inversion: simulate, recover and certify"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(lentil_version()));

    Globals g;
    auto* seed_opt = app.add_option("--seed", g.seed, "seed for every stochastic step")->capture_default_str();
    app.add_option("--threads", g.threads, "worker thread cap (0: LENTIL_THREADS or all cores)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--config", g.config, "tolerances JSON")->check(CLI::ExistingFile);

    SimulateArgs sim;
    auto* s_sim = app.add_subcommand("simulate", "forward model: sources -> unlabeled arrival cloud + truth sidecar");
    s_sim->add_option("--manifold", sim.manifold, "manifold config JSON")->required()->check(CLI::ExistingFile);
    s_sim->add_option("--scene", sim.scene, "scene JSON (sources or poisson)")->required()->check(CLI::ExistingFile);
    s_sim->add_option("--out", sim.out, "cloud CSV (header goes next to it as .json)")->required();
    s_sim->add_option("--truth", sim.truth, "truth sidecar CSV (default: <out>.truth.csv)");
    s_sim->add_option("--grid", sim.grid, "boundary grid size")->capture_default_str();
    s_sim->add_option("--t-min", sim.t_min, "window start");
    s_sim->add_option("--t-max", sim.t_max, "window end");
    s_sim->add_option("--noise", sim.noise, "uniform time noise amplitude")->capture_default_str();

    DisentangleArgs dis;
    auto* s_dis = app.add_subcommand("disentangle", "split a cloud into per-source arrival functions");
    s_dis->add_option("--cloud", dis.cloud, "cloud CSV")->required()->check(CLI::ExistingFile);
    s_dis->add_option("--out", dis.out, "separation JSON (default stdout)");
    s_dis->add_option("--graphs-csv", dis.graphs_csv, "plot data of the recovered graphs");

    ObservablesArgs obs;
    auto* s_obs = app.add_subcommand("observables", "distances and time differences of the recovered points");
    s_obs->add_option("--functions", obs.functions, "separation JSON")->required()->check(CLI::ExistingFile);
    s_obs->add_option("--out", obs.out, "space JSON (default stdout)");
    s_obs->add_option("--dd-csv", obs.dd_csv, "plot data of dd-functions");
    s_obs->add_option("--dd-pairs", obs.dd_pairs, "pairs r:s for --dd-csv (default 0:s for all s)");

    ReconstructArgs rec;
    auto* s_rec = app.add_subcommand("reconstruct", "certified density and lGH bounds of a recovered space");
    s_rec->add_option("--space", rec.space, "space JSON")->required()->check(CLI::ExistingFile);
    rec.constants.add(s_rec, true);
    auto* o_eps = s_rec->add_option("--eps1", rec.eps1, "epsilon_1")->check(CLI::PositiveNumber);
    auto* o_sweep = s_rec->add_flag("--sweep-eps1", rec.sweep, "smallest certified epsilon_1 on the data grid");
    o_eps->excludes(o_sweep);
    s_rec->add_option("--out", rec.out, "report JSON (default stdout)");

    WindowArgs win;
    auto* s_win = app.add_subcommand("window", "reconstruct over growing time windows [0, T]");
    s_win->add_option("--cloud", win.cloud, "cloud CSV")->required()->check(CLI::ExistingFile);
    s_win->add_option("--T", win.t_list, "ascending window ends")->required()->delimiter(',');
    win.constants.add(s_win, true);
    s_win->add_option("--out", win.out, "windows JSON (default stdout)");
    s_win->add_option("--curve-csv", win.curve_csv, "bound-vs-T plot data");

    ConstantsCmdArgs con;
    auto* s_con = app.add_subcommand("constants", "estimate or validate geometry constants");
    con.constants.add(s_con, true);
    s_con->add_option("--out", con.out, "constants JSON (default stdout)");

    EvaluateArgs ev;
    auto* s_ev = app.add_subcommand("evaluate", "compare a run with the ground truth");
    s_ev->add_option("--manifold", ev.manifold, "manifold config JSON")->required()->check(CLI::ExistingFile);
    s_ev->add_option("--cloud", ev.cloud, "cloud CSV")->required()->check(CLI::ExistingFile);
    s_ev->add_option("--truth", ev.truth, "truth sidecar CSV")->required()->check(CLI::ExistingFile);
    ev.constants.add(s_ev, false);
    s_ev->add_option("--eps1", ev.eps1, "fixed epsilon_1 (default: sweep)")->check(CLI::PositiveNumber);
    s_ev->add_option("--density-samples", ev.density_samples, "points for the true density");
    s_ev->add_option("--lgh-samples", ev.lgh_samples, "interior points of the sampled lGH");
    s_ev->add_option("--reverse-eps", ev.reverse_eps, "also run the reverse check at this epsilon")
        ->check(CLI::PositiveNumber);
    s_ev->add_option("--lentils", ev.lentils, "also run lentil geometry checks with this many lentils");
    s_ev->add_option("--cover-points", ev.cover_points, "interior points for the lentil cover check");
    s_ev->add_option("--out", ev.out, "evaluation JSON (default stdout)");

    LghArgs lg;
    auto* s_lgh = app.add_subcommand("lgh", "labeled GH bounds between two space files");
    s_lgh->add_option("--x", lg.x, "first space JSON")->required()->check(CLI::ExistingFile);
    s_lgh->add_option("--y", lg.y, "second space JSON")->required()->check(CLI::ExistingFile);
    s_lgh->add_option("--out", lg.out, "bounds JSON (default stdout)");

    SelftestArgs st;
    auto* s_st = app.add_subcommand("selftest", "run the acceptance suite");
    s_st->add_option("--only", st.only, "criterion ids (e.g. 1a 7)");
    s_st->add_option("--out", st.out, "results JSON");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::Success& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        app.exit(e);
        return 1;
    }

    if (g.threads > 0)
        lentil_set_threads(g.threads);
    st.seed_given = seed_opt->count() > 0;

    try
    {
        if (s_sim->parsed())
            return run_simulate(g, sim);
        if (s_dis->parsed())
            return run_disentangle(g, dis);
        if (s_obs->parsed())
            return run_observables(g, obs);
        if (s_rec->parsed())
            return run_reconstruct(g, rec);
        if (s_win->parsed())
            return run_window(g, win);
        if (s_con->parsed())
            return run_constants(g, con);
        if (s_ev->parsed())
            return run_evaluate(g, ev);
        if (s_lgh->parsed())
            return run_lgh(g, lg);
        if (s_st->parsed())
            return run_selftest(g, st);
    }
    catch (const Failure& f)
    {
        std::cerr << "lentil " << app.get_subcommands().front()->get_name() << ": " << f.message << "\n";
        return 1;
    }
    catch (const std::exception& e)
    {
        std::cerr << "lentil: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
