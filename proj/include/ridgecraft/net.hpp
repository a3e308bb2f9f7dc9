#pragma once

#include "ridgecraft/types.hpp"

#include <limits>

namespace ridgecraft {

/// Greedy net over a point cloud: centers, the covering radius they satisfy,
/// and the enforced pairwise separation.
struct NetResult {
    PointCloud centers;
    double radius = 0.0;
    double min_separation = 0.0;
};

/// Greedy sequential selection in input order: a point becomes a center
/// unless it lies within `min_separation` of an accepted center. Afterwards
/// every input point must be within `covering_radius` of some center, else
/// NetInfeasible.
inline NetResult build_net(const PointCloud& cloud, double covering_radius,
                           double min_separation) {
    if (cloud.empty()) throw std::invalid_argument("build_net: empty cloud");
    if (!(covering_radius > 0) || !(min_separation > 0))
        throw std::invalid_argument("build_net: radii must be positive");
    if (min_separation > covering_radius)
        throw std::invalid_argument("build_net: min_separation <= covering_radius");

    NetResult net;
    net.radius = covering_radius;
    net.min_separation = min_separation;
    net.centers = PointCloud(cloud.ambient_dim);

    for (const Vec& p : cloud.points) {
        bool near_center = false;
        for (const Vec& c : net.centers.points) {
            if ((p - c).norm() < min_separation) { near_center = true; break; }
        }
        if (!near_center) net.centers.push_back(p);
    }

    for (const Vec& p : cloud.points) {
        double best = std::numeric_limits<double>::max();
        for (const Vec& c : net.centers.points)
            best = std::min(best, (p - c).norm());
        if (best > covering_radius)
            throw NetInfeasibleError("build_net: point uncovered at radius " +
                                     std::to_string(covering_radius));
    }
    return net;
}

}  // namespace ridgecraft
