#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lentil/geometry.hpp"

namespace lentil {

// The nine constants of quantitative simplicity.
struct FundamentalConstants
{
    double diam = 0.0;
    double sec_minus = 0.0;
    double sec_plus = 0.0;
    double exp = 0.0;
    double jf = 0.0;
    double sff = 0.0;
    double dist = 0.0;
    double h1 = 0.0;
    double h2 = 0.0;
    // Names of constants that came from numerical estimation (empty when
    // supplied by the user); carried into reports.
    std::vector<std::string> estimated;

    nlohmann::json to_json() const;
    static FundamentalConstants from_json(const nlohmann::json& j);
};

// Fundamental constants plus every derived constant.
struct GeometryConstants
{
    FundamentalConstants base;
    double a = 0.0;  // sinc(C_diam sqrt(C_sec+))
    double b = 0.0;  // sinhc(C_diam sqrt(C_sec-)), also C13
    double c = 0.0;  // 1 + cos(C_diam sqrt(C_sec+))
    double d = 0.0;
    double e = 0.0;
    double f = 0.0;
    double g = 0.0;
    double h = 0.0;
    double i = 0.0;
    double c9 = 0.0;
    double c10 = 0.0;
    double c11 = 0.0;
    double c12 = 0.0;
    double c13 = 0.0;
    double c19 = 0.0;
    double c25 = 0.0;
    double c26 = 0.0;
    double c27 = 0.0;

    nlohmann::json to_json() const;
};

double sinc(double x);
double sinhc(double x);
double vercos(double x);

// Throws ErrorCode::constraint when C_diam sqrt(C_sec+) >= pi or a constant
// is not positive and finite.
GeometryConstants derive(const FundamentalConstants& fc);

struct EstimateSpec
{
    int boundary_samples = 48;
    int interior_samples = 64;
    int geodesic_samples = 24;
    int jacobi_steps = 64;
    int min_samples = 8;
    double safety_factor = 1.1;
    // Upper curvature floor; 0 selects (pi / (2 C_diam))^2.
    double sec_plus_floor = 0.0;
    double sec_minus_floor = 1e-12;
    double h2_floor = 1e-9;
    unsigned long long seed = 1;
};

// Numerical estimate of the fundamental constants, inflated (upper bounds)
// or deflated (C_H1) by the safety factor.
FundamentalConstants estimate(const ManifoldModel& model, const EstimateSpec& spec);

// Exact constants for a Euclidean disk of the given radius, with the
// curvature floors chosen as in EstimateSpec.
FundamentalConstants euclidean_disk_constants(double radius);

}  // namespace lentil
