#pragma once

#include "ridgecraft/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <random>

namespace ridgecraft {

enum class ManifoldKind { Circle2D, ClosedCurve3D, Sphere3D };

/// Analytic synthetic manifolds inside the unit ball.
///   Circle2D       : scale * (cos t, sin t)
///   ClosedCurve3D  : scale * (cos t, sin t, 0.3 sin 2t)  -- a smooth
///                    non-planar closed curve
///   Sphere3D       : scale * S^2
struct ManifoldSpec {
    ManifoldKind kind = ManifoldKind::Circle2D;
    double scale = 1.0;

    ManifoldSpec() = default;
    ManifoldSpec(ManifoldKind k, double s) : kind(k), scale(s) {
        if (!(scale > 0.0 && scale <= 1.0))
            throw std::invalid_argument("ManifoldSpec: scale must be in (0,1]");
    }

    int intrinsic_dim() const {
        return kind == ManifoldKind::Sphere3D ? 2 : 1;
    }
    int ambient_dim() const {
        return kind == ManifoldKind::Circle2D ? 2 : 3;
    }
};

namespace detail {

inline Vec cross3(const Vec& a, const Vec& b) {
    Vec c(3);
    c << a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0];
    return c;
}

inline Vec curve_point(double scale, double t) {
    Vec p(3);
    p << scale * std::cos(t), scale * std::sin(t), scale * 0.3 * std::sin(2 * t);
    return p;
}

inline Vec curve_velocity(double scale, double t) {
    Vec v(3);
    v << -scale * std::sin(t), scale * std::cos(t), scale * 0.6 * std::cos(2 * t);
    return v;
}

/// Cumulative arc length of the closed curve on a fixed fine grid, used to
/// invert arc length for uniform sampling.
struct CurveArcTable {
    static constexpr int kGrid = 100000;
    std::vector<double> cumulative;  // cumulative[i] = length over [0, t_i]
    double total = 0.0;
    double scale;

    explicit CurveArcTable(double s) : scale(s) {
        cumulative.resize(kGrid + 1);
        cumulative[0] = 0.0;
        const double two_pi = 2.0 * std::numbers::pi;
        double prev_speed = curve_velocity(scale, 0.0).norm();
        for (int i = 1; i <= kGrid; ++i) {
            double t = two_pi * i / kGrid;
            double speed = curve_velocity(scale, t).norm();
            cumulative[i] =
                cumulative[i - 1] + 0.5 * (prev_speed + speed) * (two_pi / kGrid);
            prev_speed = speed;
        }
        total = cumulative.back();
    }

    /// Parameter t such that arclength([0,t]) = s, by binary search and
    /// linear interpolation within the grid cell.
    double invert(double s) const {
        const double two_pi = 2.0 * std::numbers::pi;
        auto it = std::lower_bound(cumulative.begin(), cumulative.end(), s);
        if (it == cumulative.begin()) return 0.0;
        std::size_t hi = static_cast<std::size_t>(it - cumulative.begin());
        std::size_t lo = hi - 1;
        double seg = cumulative[hi] - cumulative[lo];
        double frac = seg > 0 ? (s - cumulative[lo]) / seg : 0.0;
        return two_pi * (static_cast<double>(lo) + frac) / kGrid;
    }
};

inline const CurveArcTable& curve_arc_table(double scale) {
    // The curve scale is fixed per spec within a process run in practice;
    // cache one table per distinct scale.
    static thread_local double cached_scale = -1.0;
    static thread_local std::unique_ptr<CurveArcTable> table;
    if (!table || cached_scale != scale) {
        table = std::make_unique<CurveArcTable>(scale);
        cached_scale = scale;
    }
    return *table;
}

}  // namespace detail

/// Uniform (w.r.t. arc length / surface area) sample of `count` points,
/// deterministic for a fixed seed.
inline PointCloud sample_manifold(const ManifoldSpec& spec, std::size_t count,
                                  std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("sample_manifold: count >= 1");
    std::mt19937_64 rng(seed);
    PointCloud cloud(spec.ambient_dim());
    const double two_pi = 2.0 * std::numbers::pi;
    switch (spec.kind) {
        case ManifoldKind::Circle2D: {
            std::uniform_real_distribution<double> angle(0.0, two_pi);
            for (std::size_t i = 0; i < count; ++i) {
                double t = angle(rng);
                Vec p(2);
                p << spec.scale * std::cos(t), spec.scale * std::sin(t);
                cloud.push_back(std::move(p));
            }
            break;
        }
        case ManifoldKind::Sphere3D: {
            std::normal_distribution<double> gauss(0.0, 1.0);
            for (std::size_t i = 0; i < count; ++i) {
                Vec g(3);
                do {
                    g << gauss(rng), gauss(rng), gauss(rng);
                } while (g.norm() < 1e-12);
                cloud.push_back(spec.scale * g.normalized());
            }
            break;
        }
        case ManifoldKind::ClosedCurve3D: {
            const auto& table = detail::curve_arc_table(spec.scale);
            std::uniform_real_distribution<double> len(0.0, table.total);
            for (std::size_t i = 0; i < count; ++i) {
                double t = table.invert(len(rng));
                cloud.push_back(detail::curve_point(spec.scale, t));
            }
            break;
        }
    }
    return cloud;
}

/// Independent N(0, sd^2) perturbation of every coordinate. sd = 0 returns
/// the input unchanged without touching the generator.
inline PointCloud add_gaussian_noise(const PointCloud& cloud, double sd,
                                     std::uint64_t seed) {
    if (sd < 0) throw std::invalid_argument("add_gaussian_noise: sd >= 0");
    if (sd == 0.0) return cloud;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, sd);
    PointCloud out(cloud.ambient_dim);
    out.points.reserve(cloud.size());
    for (const Vec& p : cloud.points) {
        Vec q = p;
        for (int j = 0; j < q.size(); ++j) q[j] += gauss(rng);
        out.push_back(std::move(q));
    }
    return out;
}

/// Euclidean closest point on the analytic manifold. Closed form for the
/// circle and sphere (radial projection); parameter grid search with Newton
/// refinement for the closed curve.
inline Vec project_to_manifold(const ManifoldSpec& spec, const Vec& x) {
    if (x.size() != spec.ambient_dim())
        throw std::invalid_argument("project_to_manifold: dimension mismatch");
    switch (spec.kind) {
        case ManifoldKind::Circle2D:
        case ManifoldKind::Sphere3D: {
            double r = x.norm();
            if (r < 1e-14)
                throw ProjectionAmbiguousError(
                    "projection ambiguous at the manifold center");
            return (spec.scale / r) * x;
        }
        case ManifoldKind::ClosedCurve3D: {
            const double two_pi = 2.0 * std::numbers::pi;
            const int coarse = 2048;
            double best_t = 0.0, best_d2 = std::numeric_limits<double>::max();
            for (int i = 0; i < coarse; ++i) {
                double t = two_pi * i / coarse;
                double d2 = (detail::curve_point(spec.scale, t) - x).squaredNorm();
                if (d2 < best_d2) { best_d2 = d2; best_t = t; }
            }
            // Newton on g(t) = (r(t)-x).r'(t); fall back to bisection-sized
            // steps if Newton wanders outside the bracketing cell.
            double t = best_t;
            for (int iter = 0; iter < 50; ++iter) {
                Vec r = detail::curve_point(spec.scale, t);
                Vec v = detail::curve_velocity(spec.scale, t);
                Vec a(3);
                a << -spec.scale * std::cos(t), -spec.scale * std::sin(t),
                    -spec.scale * 1.2 * std::sin(2 * t);
                double g = (r - x).dot(v);
                double dg = v.squaredNorm() + (r - x).dot(a);
                if (std::abs(dg) < 1e-16) break;
                double step = g / dg;
                step = std::clamp(step, -two_pi / coarse, two_pi / coarse);
                t -= step;
                if (std::abs(step) < 1e-15) break;
            }
            Vec refined = detail::curve_point(spec.scale, t);
            return (refined - x).squaredNorm() <= best_d2
                       ? refined
                       : detail::curve_point(spec.scale, best_t);
        }
    }
    throw std::logic_error("unreachable");
}

/// Distance from x to the analytic manifold.
inline double distance_to_manifold(const ManifoldSpec& spec, const Vec& x) {
    return (x - project_to_manifold(spec, x)).norm();
}

/// d-dimensional volume (circumference / arc length / surface area).
inline double manifold_volume(const ManifoldSpec& spec) {
    const double two_pi = 2.0 * std::numbers::pi;
    switch (spec.kind) {
        case ManifoldKind::Circle2D: return two_pi * spec.scale;
        case ManifoldKind::Sphere3D: return 2.0 * two_pi * spec.scale * spec.scale;
        case ManifoldKind::ClosedCurve3D:
            return detail::curve_arc_table(spec.scale).total;
    }
    throw std::logic_error("unreachable");
}

/// Reach: exact for circle/sphere; for the curve, the minimum radius of
/// curvature over a fine grid (an upper bound that is tight here, since the
/// curve's medial axis is governed by curvature at this aspect ratio).
inline double manifold_reach(const ManifoldSpec& spec) {
    switch (spec.kind) {
        case ManifoldKind::Circle2D:
        case ManifoldKind::Sphere3D:
            return spec.scale;
        case ManifoldKind::ClosedCurve3D: {
            const double two_pi = 2.0 * std::numbers::pi;
            const int grid = 4096;
            double min_radius = std::numeric_limits<double>::max();
            for (int i = 0; i < grid; ++i) {
                double t = two_pi * i / grid;
                Vec v = detail::curve_velocity(spec.scale, t);
                Vec a(3);
                a << -spec.scale * std::cos(t), -spec.scale * std::sin(t),
                    -spec.scale * 1.2 * std::sin(2 * t);
                double cross = detail::cross3(v, a).norm();
                if (cross < 1e-16) continue;
                min_radius = std::min(min_radius, std::pow(v.norm(), 3) / cross);
            }
            return min_radius;
        }
    }
    throw std::logic_error("unreachable");
}

/// Orthonormal basis (n x d) of the true tangent space at a manifold point.
inline Mat analytic_tangent(const ManifoldSpec& spec, const Vec& p) {
    switch (spec.kind) {
        case ManifoldKind::Circle2D: {
            Mat basis(2, 1);
            Vec r = p.normalized();
            basis << -r[1], r[0];
            return basis;
        }
        case ManifoldKind::Sphere3D: {
            Vec r = p.normalized();
            // Two orthonormal vectors spanning the tangent plane.
            Vec helper = std::abs(r[0]) < 0.9 ? Vec(Vec::Unit(3, 0)) : Vec(Vec::Unit(3, 1));
            Vec t1 = (helper - helper.dot(r) * r).normalized();
            Vec t2 = detail::cross3(r, t1).normalized();
            Mat basis(3, 2);
            basis.col(0) = t1;
            basis.col(1) = t2;
            return basis;
        }
        case ManifoldKind::ClosedCurve3D: {
            // Recover the parameter by projecting, then use the velocity.
            const double two_pi = 2.0 * std::numbers::pi;
            const int coarse = 4096;
            double best_t = 0.0, best_d2 = std::numeric_limits<double>::max();
            for (int i = 0; i < coarse; ++i) {
                double t = two_pi * i / coarse;
                double d2 = (detail::curve_point(spec.scale, t) - p).squaredNorm();
                if (d2 < best_d2) { best_d2 = d2; best_t = t; }
            }
            Mat basis(3, 1);
            basis.col(0) = detail::curve_velocity(spec.scale, best_t).normalized();
            return basis;
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace ridgecraft
