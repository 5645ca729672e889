#pragma once

// Independent closed forms used as test oracles. Written in terms of
// hyperboloid / sphere embeddings rather than the Moebius maps used by the
// library.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "lentil/vec2.hpp"

namespace oracle {

using lentil::Vec2;

// Poincare-type disk of curvature -k^2: cosh(k d) = 1 + 2|a-b|^2/((1-|a|^2)(1-|b|^2)), a = k p.
inline double hyperbolic_distance(Vec2 p, Vec2 q, double k)
{
    const Vec2 a = p * k, b = q * k;
    const double num = 2.0 * lentil::norm2(a - b);
    const double den = (1.0 - lentil::norm2(a)) * (1.0 - lentil::norm2(b));
    return std::acosh(1.0 + num / den) / k;
}

// Stereographic disk of curvature k^2: lift to the unit sphere.
inline double spherical_distance(Vec2 p, Vec2 q, double k)
{
    auto lift = [&](Vec2 v) {
        const Vec2 w = v * k;
        const double s = 1.0 + lentil::norm2(w);
        struct P3 { double x, y, z; };
        return P3{2 * w.x / s, 2 * w.y / s, (1.0 - lentil::norm2(w)) / s};
    };
    const auto a = lift(p), b = lift(q);
    const double d = a.x * b.x + a.y * b.y + a.z * b.z;
    return std::acos(std::fmax(-1.0, std::fmin(1.0, d))) / k;
}

// Second derivative in the angle of |e^{i t} - (a,0)| on the unit circle.
inline double euclidean_rp_second_derivative(double a, double t)
{
    const double r = std::sqrt(1.0 + a * a - 2.0 * a * std::cos(t));
    const double s = std::sin(t);
    return a * std::cos(t) / r - a * a * s * s / (r * r * r);
}

// Labeled GH by brute force: every half-integer cross matrix W (0..wmax) that
// makes X u Y a (pseudo)metric, scored directly as d_H + worst label gap.
// Only an upper bound for general data; exact when an optimum is half-integer.
inline double labeled_gh_grid(const std::vector<std::vector<double>>& dx, const std::vector<std::vector<double>>& dy,
                              const std::vector<std::pair<int, int>>& labels, double wmax)
{
    const int nx = static_cast<int>(dx.size()), ny = static_cast<int>(dy.size()), n = nx + ny;
    const int steps = static_cast<int>(std::lround(2 * wmax)) + 1;
    std::vector<double> w(nx * ny, 0.0);
    double best = std::numeric_limits<double>::infinity();
    auto d = [&](int a, int b) {
        if (a < nx && b < nx) return dx[a][b];
        if (a >= nx && b >= nx) return dy[a - nx][b - nx];
        if (a < nx) return w[a * ny + (b - nx)];
        return w[b * ny + (a - nx)];
    };
    std::function<void(int)> rec = [&](int k) {
        if (k < nx * ny)
        {
            for (int s = 0; s < steps; ++s)
            {
                w[k] = 0.5 * s;
                rec(k + 1);
            }
            return;
        }
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                for (int c = 0; c < n; ++c)
                    if (d(a, c) > d(a, b) + d(b, c) + 1e-12)
                        return;
        double h = 0;
        for (int i = 0; i < nx; ++i)
        {
            double m = std::numeric_limits<double>::infinity();
            for (int j = 0; j < ny; ++j) m = std::min(m, w[i * ny + j]);
            h = std::max(h, m);
        }
        for (int j = 0; j < ny; ++j)
        {
            double m = std::numeric_limits<double>::infinity();
            for (int i = 0; i < nx; ++i) m = std::min(m, w[i * ny + j]);
            h = std::max(h, m);
        }
        double l = 0;
        for (const auto& [a, b] : labels) l = std::max(l, w[a * ny + b]);
        best = std::min(best, h + l);
    };
    rec(0);
    return best;
}

}  // namespace oracle
