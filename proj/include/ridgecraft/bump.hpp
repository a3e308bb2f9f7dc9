#pragma once

#include "ridgecraft/types.hpp"

#include <cmath>

namespace ridgecraft {

struct BumpEval {
    double value = 0.0;
    Vec gradient;
    Mat hessian;
};

namespace detail {

/// Mollifier f(t) = exp(-1/t) for t > 0, else 0, with two derivatives.
struct Mollifier {
    double v = 0.0, d1 = 0.0, d2 = 0.0;
    explicit Mollifier(double t) {
        if (t > 0.0) {
            v = std::exp(-1.0 / t);
            d1 = v / (t * t);
            d2 = v * (1.0 - 2.0 * t) / (t * t * t * t);
        }
    }
};

/// Smooth step S(t) = f(t) / (f(t) + f(1-t)): 0 for t <= 0, 1 for t >= 1,
/// C^inf in between. Returns value and two derivatives.
struct SmoothStep {
    double v = 0.0, d1 = 0.0, d2 = 0.0;
    explicit SmoothStep(double t) {
        if (t <= 0.0) return;
        if (t >= 1.0) { v = 1.0; return; }
        Mollifier a(t), b(1.0 - t);
        const double den = a.v + b.v;
        const double den_d1 = a.d1 - b.d1;
        const double den_d2 = a.d2 + b.d2;
        v = a.v / den;
        d1 = (a.d1 * den - a.v * den_d1) / (den * den);
        // quotient rule applied twice
        const double num_d2 = a.d2 * den - a.v * den_d2;
        d2 = num_d2 / (den * den) - 2.0 * den_d1 * d1 / den;
    }
};

}  // namespace detail

/// Radial C^inf bump: 1 for ||y|| <= 1/4, 0 for ||y|| >= 1, built from the
/// exponential mollifier pair. Gradient and Hessian are returned alongside
/// the value; all derivatives vanish at the flat regions and at y = 0.
inline BumpEval bump_theta(const Vec& y) {
    const auto dim = y.size();
    BumpEval out;
    out.gradient = Vec::Zero(dim);
    out.hessian = Mat::Zero(dim, dim);

    const double r = y.norm();
    if (r <= 0.25) { out.value = 1.0; return out; }
    if (r >= 1.0) { out.value = 0.0; return out; }

    // t = (1 - r) / (3/4) maps r in [1/4, 1] onto t in [1, 0].
    detail::SmoothStep s((1.0 - r) / 0.75);
    const double g1 = -s.d1 / 0.75;          // d theta / d r
    const double g2 = s.d2 / (0.75 * 0.75);  // d^2 theta / d r^2

    out.value = s.v;
    out.gradient = (g1 / r) * y;
    out.hessian = (g1 / r) * Mat::Identity(dim, dim) +
                  ((g2 - g1 / r) / (r * r)) * (y * y.transpose());
    return out;
}

}  // namespace ridgecraft
