#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "lentil/vec2.hpp"

namespace lentil {

// Value, gradient and Hessian of a scalar field at a point.
struct Jet2
{
    double v = 0.0;
    double dx = 0.0;
    double dy = 0.0;
    double dxx = 0.0;
    double dxy = 0.0;
    double dyy = 0.0;

    static Jet2 constant(double c) { return {c, 0, 0, 0, 0, 0}; }
    static Jet2 var_x(double x) { return {x, 1, 0, 0, 0, 0}; }
    static Jet2 var_y(double y) { return {y, 0, 1, 0, 0, 0}; }
};

Jet2 operator+(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a, const Jet2& b);
Jet2 operator-(const Jet2& a);
Jet2 operator*(const Jet2& a, const Jet2& b);
Jet2 operator/(const Jet2& a, const Jet2& b);
// Applies a scalar function with derivatives f0, f1, f2 at a.v (chain rule).
Jet2 compose(const Jet2& a, double f0, double f1, double f2);

// Wave speed c(x) of a conformal metric g = c^{-2} delta. Travel time equals
// metric arclength.
class SpeedField
{
  public:
    virtual ~SpeedField() = default;
    virtual Jet2 eval(Vec2 p) const = 0;
    virtual nlohmann::json to_json() const = 0;
    // True when c depends on |x| only; enables exact radial shortcuts.
    virtual bool is_radial() const { return false; }
};

using SpeedFieldPtr = std::shared_ptr<const SpeedField>;

// c(x) = (1 + kappa |x|^2) / 2: the Poincare (kappa < 0) or stereographic
// (kappa > 0) model of constant curvature kappa.
SpeedFieldPtr make_constant_curvature_speed(double kappa);

// Speed given by an arithmetic expression in x, y, r, r2 (r2 = x^2 + y^2).
// Supports + - * / ^, unary minus, parentheses, numeric literals, pi, and
// the functions sin cos tan exp log sqrt sinh cosh tanh atan.
SpeedFieldPtr make_expression_speed(const std::string& expression);

// Speed sampled on an n x n Cartesian grid spanning [-extent, extent]^2,
// row-major with x varying fastest; bicubic (Catmull-Rom) interpolation.
SpeedFieldPtr make_grid_speed(int n, double extent, std::vector<double> values);

// Builds a field from the "conformal" member of a manifold config.
SpeedFieldPtr speed_from_json(const nlohmann::json& j);

}  // namespace lentil
