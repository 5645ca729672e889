#include "lentil/tolerances.hpp"

#include "lentil/error.hpp"

namespace lentil {

nlohmann::json Tolerances::to_json() const
{
    return {{"tol_dist_rel", tol_dist_rel},     {"obs_tol_grid", obs_tol_grid},
            {"jet_tol_factor", jet_tol_factor}, {"jet_tol_abs", jet_tol_abs},
            {"h_hess_nodes", h_hess_nodes},     {"richardson", richardson},
            {"r_grid", r_grid},                 {"safety_factor", safety_factor},
            {"const_tol_factor", const_tol_factor}};
}

namespace {

template <class T>
void read_field(const nlohmann::json& j, const char* name, T& out)
{
    if (!j.contains(name))
        return;
    try
    {
        out = j.at(name).get<T>();
    }
    catch (const nlohmann::json::exception&)
    {
        fail(ErrorCode::parse, std::string("tolerances: field '") + name + "' has the wrong type");
    }
}

}  // namespace

Tolerances Tolerances::from_json(const nlohmann::json& j)
{
    if (!j.is_object())
        fail(ErrorCode::parse, "tolerances: expected a JSON object");
    static const char* known[] = {"tol_dist_rel", "obs_tol_grid", "jet_tol_factor",
                                  "jet_tol_abs",  "h_hess_nodes", "richardson",
                                  "r_grid",       "safety_factor", "const_tol_factor"};
    for (auto it = j.begin(); it != j.end(); ++it)
    {
        bool ok = false;
        for (const char* k : known)
            ok = ok || it.key() == k;
        if (!ok)
            fail(ErrorCode::parse, "tolerances: unknown field '" + it.key() + "'");
    }
    Tolerances t;
    read_field(j, "tol_dist_rel", t.tol_dist_rel);
    read_field(j, "obs_tol_grid", t.obs_tol_grid);
    read_field(j, "jet_tol_factor", t.jet_tol_factor);
    read_field(j, "jet_tol_abs", t.jet_tol_abs);
    read_field(j, "h_hess_nodes", t.h_hess_nodes);
    read_field(j, "richardson", t.richardson);
    read_field(j, "r_grid", t.r_grid);
    read_field(j, "safety_factor", t.safety_factor);
    read_field(j, "const_tol_factor", t.const_tol_factor);

    require(t.tol_dist_rel > 0, ErrorCode::constraint, "tolerances: tol_dist_rel must be > 0");
    require(t.obs_tol_grid > 0, ErrorCode::constraint, "tolerances: obs_tol_grid must be > 0");
    require(t.jet_tol_factor > 0, ErrorCode::constraint, "tolerances: jet_tol_factor must be > 0");
    require(t.jet_tol_abs >= 0, ErrorCode::constraint, "tolerances: jet_tol_abs must be >= 0");
    require(t.h_hess_nodes >= 1, ErrorCode::constraint, "tolerances: h_hess_nodes must be >= 1");
    require(t.r_grid >= 1, ErrorCode::constraint, "tolerances: r_grid must be >= 1");
    require(t.safety_factor >= 1, ErrorCode::constraint, "tolerances: safety_factor must be >= 1");
    require(t.const_tol_factor > 0, ErrorCode::constraint, "tolerances: const_tol_factor must be > 0");
    return t;
}

}  // namespace lentil
