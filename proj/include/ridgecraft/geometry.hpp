#pragma once

#include "ridgecraft/manifold.hpp"
#include "ridgecraft/types.hpp"

#include <limits>

namespace ridgecraft {

/// Distance from x to its nearest neighbor in `cloud` (brute force; the
/// clouds in play are small enough that this stays cheap).
inline double nn_distance(const Vec& x, const PointCloud& cloud) {
    double best = std::numeric_limits<double>::max();
    for (const Vec& p : cloud.points)
        best = std::min(best, (x - p).squaredNorm());
    return std::sqrt(best);
}

/// sqrt(mean squared nearest-neighbor distance) against a reference cloud.
inline double rms_distance(const PointCloud& cloud, const PointCloud& reference) {
    if (cloud.empty() || reference.empty())
        throw std::invalid_argument("rms_distance: empty cloud");
    double acc = 0.0;
    for (const Vec& p : cloud.points) {
        double d = nn_distance(p, reference);
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(cloud.size()));
}

/// sqrt(mean squared distance) against the analytic manifold.
inline double rms_distance(const PointCloud& cloud, const ManifoldSpec& spec) {
    if (cloud.empty()) throw std::invalid_argument("rms_distance: empty cloud");
    double acc = 0.0;
    for (const Vec& p : cloud.points) {
        double d = distance_to_manifold(spec, p);
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(cloud.size()));
}

/// Directed Hausdorff: sup over a of nearest-neighbor distance into b.
inline double directed_hausdorff(const PointCloud& a, const PointCloud& b) {
    double worst = 0.0;
    for (const Vec& p : a.points) worst = std::max(worst, nn_distance(p, b));
    return worst;
}

/// Symmetric Hausdorff distance: max of the two directed sup-inf distances.
inline double hausdorff_distance(const PointCloud& a, const PointCloud& b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("hausdorff_distance: empty cloud");
    return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

/// Flat input sentinel for estimate_reach.
inline constexpr double kReachSentinel = 1e12;

/// Discrete Federer estimate: 1 / sup over pairs of 2||b - Pi_a b|| / ||b-a||^2,
/// where Pi_a projects onto the tangent space at a. `frames` holds one n x d
/// orthonormal basis per cloud point. A lower-bound diagnostic up to sampling.
inline double estimate_reach(const PointCloud& cloud, const std::vector<Mat>& frames) {
    if (cloud.size() < 2)
        throw std::invalid_argument("estimate_reach: need >= 2 points");
    if (frames.size() != cloud.size())
        throw std::invalid_argument("estimate_reach: one frame per point");
    double sup = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const Mat& basis = frames[i];
        for (std::size_t j = 0; j < cloud.size(); ++j) {
            if (i == j) continue;
            Vec diff = cloud[j] - cloud[i];
            double dist2 = diff.squaredNorm();
            if (dist2 < 1e-28)
                throw DegeneratePairError("estimate_reach: coincident points");
            Vec normal_part = diff - basis * (basis.transpose() * diff);
            sup = std::max(sup, 2.0 * normal_part.norm() / dist2);
        }
    }
    return sup < 1.0 / kReachSentinel ? kReachSentinel : 1.0 / sup;
}

}  // namespace ridgecraft
