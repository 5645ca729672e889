#pragma once

#include <json.hpp>

namespace lentil {

// Numerical tolerances shared by the pipeline. Values that scale with the
// model (tol_dist) or the grid (obs_tol, jet_tol) are stored as factors and
// resolved against a concrete model or grid by the helpers below.
struct Tolerances
{
    // Distance solver tolerance as a fraction of the model diameter.
    double tol_dist_rel = 1e-7;
    // obs_tol = obs_tol_grid * (grid spacing in time units).
    double obs_tol_grid = 2.0;
    // jet_tol = jet_tol_factor * (estimated finite-difference noise floor);
    // a positive jet_tol_abs overrides the adaptive value.
    double jet_tol_factor = 5.0;
    double jet_tol_abs = 0.0;
    // Hessian stencil half-width in grid nodes.
    int h_hess_nodes = 2;
    bool richardson = false;
    // Lentil radii tested per pair.
    int r_grid = 32;
    // Inflation applied to estimated constants.
    double safety_factor = 1.1;
    // Oscillation threshold (relative to tol_dist) below which two arrival
    // functions are treated as the same spatial point.
    double const_tol_factor = 100.0;

    nlohmann::json to_json() const;
    static Tolerances from_json(const nlohmann::json& j);
};

}  // namespace lentil
