#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "lentil/boundary.hpp"
#include "lentil/disentangle.hpp"
#include "lentil/tolerances.hpp"

namespace lentil {

// Boundary points where the differentials of two arrival functions agree:
// the ends of the geodesic through both sources. `y` lies beyond s as seen
// from r, so d(p_r, y) = d(p_r, p_s) + d(p_s, y).
struct EndpointPair
{
    GridParam x;
    GridParam y;
    // 1/|D''| at the worse endpoint, D = a_r - a_s; large when the extremum
    // is flat (nearly collinear with a boundary tangent or nearly merged).
    double condition = 0.0;
};

struct PairObservables
{
    EndpointPair endpoints;
    double distance = 0.0;
    double time_diff = 0.0;   // tau_r - tau_s
    double spread = 0.0;      // max - min of the per-node time difference
    double orientation_residual = 0.0;
};

double obs_tol(const BoundaryGrid& grid, const Tolerances& tol);

EndpointPair conjoined_endpoints(const std::vector<double>& a_r, const std::vector<double>& a_s,
                                 const BoundaryGrid& grid, double tol);
double pairwise_distance(const std::vector<double>& a_r, const std::vector<double>& a_s, const EndpointPair& e,
                         const BoundaryGrid& grid);
// f^{rs}(z) = d(p_r, z) - d(p_s, z) on every node. Resolves the orientation
// of `e` in place (swapping x and y if the other choice is consistent).
std::vector<double> distance_difference_function(const std::vector<double>& a_r, const std::vector<double>& a_s,
                                                 EndpointPair& e, const BoundaryGrid& grid, double tol,
                                                 double* orientation_residual = nullptr);
// tau_r - tau_s as the median over nodes; spread is checked against 10 tol.
double time_difference(const std::vector<double>& a_r, const std::vector<double>& a_s, const std::vector<double>& f_rs,
                       double tol, double* spread = nullptr);

PairObservables observe_pair(const std::vector<double>& a_r, const std::vector<double>& a_s,
                             const BoundaryGrid& grid, double tol);

// Finite space recovered from separated arrival functions.
class DiscreteSpace
{
  public:
    static DiscreteSpace assemble(const std::vector<ArrivalFunction>& functions, const CloudHeader& header,
                                  const Tolerances& tol);

    std::size_t size() const { return n_; }
    double dist(std::size_t r, std::size_t s) const { return dist_[r * n_ + s]; }
    double time_diff(std::size_t r, std::size_t s) const { return tdiff_[r * n_ + s]; }
    // Orientation is as seen from r; (s, r) has x and y exchanged.
    EndpointPair endpoints(std::size_t r, std::size_t s) const;
    std::vector<double> dd_function(std::size_t r, std::size_t s) const;
    const std::vector<ArrivalFunction>& functions() const { return functions_; }
    const CloudHeader& header() const { return header_; }
    BoundaryGrid grid() const { return header_.grid(); }
    double obs_tolerance() const { return obs_tol_; }
    double max_condition() const;
    const std::vector<double>& dist_matrix() const { return dist_; }
    const std::vector<double>& time_diff_matrix() const { return tdiff_; }

    nlohmann::json to_json() const;
    static DiscreteSpace from_json(const nlohmann::json& j);
    // One row per node: param, then f^{rs} for each requested pair.
    void write_dd_csv(const std::string& path, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) const;

  private:
    std::size_t n_ = 0;
    CloudHeader header_;
    double obs_tol_ = 0.0;
    std::vector<double> dist_, tdiff_;
    std::vector<EndpointPair> ends_;  // upper triangle, r < s, as seen from r
    std::vector<ArrivalFunction> functions_;
    std::size_t tri(std::size_t r, std::size_t s) const { return r * n_ + s; }
};

}  // namespace lentil
