#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace ridgecraft {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Ordered collection of points in R^n. The universal currency between
/// modules; immutable by convention once handed off.
struct PointCloud {
    std::vector<Vec> points;
    int ambient_dim = 0;

    PointCloud() = default;
    explicit PointCloud(int dim) : ambient_dim(dim) {}

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    const Vec& operator[](std::size_t i) const { return points[i]; }

    void push_back(Vec p) {
        if (ambient_dim == 0) ambient_dim = static_cast<int>(p.size());
        if (p.size() != ambient_dim)
            throw std::invalid_argument("PointCloud: point dimension mismatch");
        if (!p.allFinite())
            throw std::invalid_argument("PointCloud: non-finite coordinate");
        points.push_back(std::move(p));
    }
};

/// Value, gradient and Hessian of an asdf at a query point. The Hessian is
/// symmetrized on construction by the evaluators.
struct AsdfEvaluation {
    double value = 0.0;
    Vec gradient;
    Mat hessian;
};

// Error taxonomy. Domain errors (a query left the region where the asdf is
// meaningful) derive from AsdfDomainError so descent can catch them as a
// group and freeze the trajectory.

struct NetInfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ProjectionAmbiguousError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegeneratePairError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientNeighborsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateSpectrumError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EigenFailureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AsdfDomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NumericUnderflowError : AsdfDomainError {
    using AsdfDomainError::AsdfDomainError;
};
struct OutsidePacketError : AsdfDomainError {
    using AsdfDomainError::AsdfDomainError;
};
struct ZeroWeightError : AsdfDomainError {
    using AsdfDomainError::AsdfDomainError;
};

}  // namespace ridgecraft
