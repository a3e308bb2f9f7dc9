#include "ridgecraft/geometry.hpp"
#include "ridgecraft/manifold.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

using namespace ridgecraft;

namespace {
constexpr double kPi = std::numbers::pi;

PointCloud circle_net(int count, double radius) {
    PointCloud cloud(2);
    for (int i = 0; i < count; ++i) {
        double t = 2 * kPi * i / count;
        Vec p(2);
        p << radius * std::cos(t), radius * std::sin(t);
        cloud.push_back(std::move(p));
    }
    return cloud;
}
}  // namespace

TEST_CASE("rms distance basics") {
    ManifoldSpec spec(ManifoldKind::Circle2D, 1.0);
    PointCloud reference = sample_manifold(spec, 10000, 2);
    CHECK(rms_distance(reference, reference) == 0.0);

    // a single point at distance 0.1 from the circle, against a dense sample:
    // nn distance is 0.1 up to the sample's covering radius
    PointCloud single(2);
    Vec x(2);
    x << 1.1, 0.0;
    single.push_back(x);
    CHECK(rms_distance(single, reference) == Catch::Approx(0.1).margin(0.01));
    CHECK(rms_distance(single, spec) == Catch::Approx(0.1).epsilon(1e-10));

    // exact manifold samples against a dense reference stay below the
    // covering radius of the reference
    PointCloud probe = sample_manifold(spec, 100, 3);
    CHECK(rms_distance(probe, reference) < 0.02);
}

TEST_CASE("hausdorff distance: identity, single pair, shifted net") {
    PointCloud a(2), b(2);
    a.push_back(Vec::Zero(2));
    Vec far(2);
    far << 3.0, 4.0;
    b.push_back(far);
    CHECK(hausdorff_distance(a, a) == 0.0);
    CHECK(hausdorff_distance(a, b) == Catch::Approx(5.0));

    PointCloud net = circle_net(100, 1.0);
    PointCloud shifted(2);
    for (const Vec& p : net.points) {
        Vec q = p;
        q[0] += 0.01;
        shifted.push_back(q);
    }
    double h = hausdorff_distance(net, shifted);
    CHECK(h >= 0.0099);
    CHECK(h <= 0.01 + 1e-12);
}

TEST_CASE("hausdorff symmetry and triangle inequality on random triples") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss;
    auto random_cloud = [&](int count) {
        PointCloud cloud(3);
        for (int i = 0; i < count; ++i) {
            Vec p(3);
            p << gauss(rng), gauss(rng), gauss(rng);
            cloud.push_back(std::move(p));
        }
        return cloud;
    };
    for (int trial = 0; trial < 10; ++trial) {
        PointCloud a = random_cloud(15), b = random_cloud(20), c = random_cloud(10);
        double ab = hausdorff_distance(a, b);
        double ba = hausdorff_distance(b, a);
        CHECK(ab == ba);
        CHECK(ab <= hausdorff_distance(a, c) + hausdorff_distance(c, b) + 1e-12);
    }
}

TEST_CASE("reach estimate: circle, sphere, flat segment, errors") {
    ManifoldSpec circle(ManifoldKind::Circle2D, 1.0);
    PointCloud cloud = circle_net(400, 1.0);
    std::vector<Mat> frames;
    for (const Vec& p : cloud.points) frames.push_back(analytic_tangent(circle, p));
    double reach = estimate_reach(cloud, frames);
    CHECK(reach == Catch::Approx(1.0).epsilon(0.05));

    // brute-force oracle: same sup computed independently
    double sup = 0.0;
    for (std::size_t i = 0; i < cloud.size(); ++i)
        for (std::size_t j = 0; j < cloud.size(); ++j) {
            if (i == j) continue;
            Vec diff = cloud[j] - cloud[i];
            Vec tang = frames[i] * (frames[i].transpose() * diff);
            sup = std::max(sup, 2.0 * (diff - tang).norm() / diff.squaredNorm());
        }
    CHECK(reach == Catch::Approx(1.0 / sup));

    ManifoldSpec sphere(ManifoldKind::Sphere3D, 0.5);
    PointCloud scloud = sample_manifold(sphere, 2000, 8);
    std::vector<Mat> sframes;
    for (const Vec& p : scloud.points) sframes.push_back(analytic_tangent(sphere, p));
    CHECK(estimate_reach(scloud, sframes) == Catch::Approx(0.5).epsilon(0.05));

    // straight segment with exact tangents: flat, sentinel
    PointCloud segment(2);
    std::vector<Mat> tangents;
    Mat dir(2, 1);
    dir << 1.0, 0.0;
    for (int i = 0; i < 20; ++i) {
        Vec p(2);
        p << 0.05 * i, 0.0;
        segment.push_back(std::move(p));
        tangents.push_back(dir);
    }
    CHECK(estimate_reach(segment, tangents) == kReachSentinel);

    PointCloud dup(2);
    dup.push_back(Vec::Zero(2));
    dup.push_back(Vec::Zero(2));
    CHECK_THROWS_AS(estimate_reach(dup, {dir, dir}), DegeneratePairError);
}

TEST_CASE("reach estimate scales linearly with the cloud") {
    ManifoldSpec circle(ManifoldKind::Circle2D, 1.0);
    PointCloud cloud = circle_net(200, 1.0);
    std::vector<Mat> frames;
    for (const Vec& p : cloud.points) frames.push_back(analytic_tangent(circle, p));
    double base = estimate_reach(cloud, frames);

    const double c = 0.37;
    PointCloud scaled(2);
    for (const Vec& p : cloud.points) scaled.push_back(c * p);
    double scaled_reach = estimate_reach(scaled, frames);  // tangents unchanged
    CHECK(scaled_reach == Catch::Approx(c * base).epsilon(1e-8));
}
