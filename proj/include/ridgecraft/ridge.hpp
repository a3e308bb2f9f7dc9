#pragma once

#include "ridgecraft/types.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>
#include <vector>

namespace ridgecraft {

struct DescentConfig {
    double step_size = 0.1;
    int max_iters = 200;
    double tolerance = 1e-7;
    bool backtracking = true;
    int intrinsic_dim = 1;

    void check() const {
        if (!(step_size > 0)) throw std::invalid_argument("DescentConfig: step > 0");
        if (max_iters < 1) throw std::invalid_argument("DescentConfig: max_iters >= 1");
        if (!(tolerance > 0)) throw std::invalid_argument("DescentConfig: tol > 0");
        if (intrinsic_dim < 1) throw std::invalid_argument("DescentConfig: d >= 1");
    }
};

enum class DescentStatus { Converged, MaxIters, LeftDomain };

struct DescentTrace {
    Vec final_point;
    int iterations = 0;
    bool converged = false;
    double residual = 0.0;
    DescentStatus status = DescentStatus::MaxIters;
    bool degenerate_split = false;  // eigenvalue tie at the d/(n-d) split
};

/// Evaluator handle: any callable producing an AsdfEvaluation; domain exits
/// are signalled by throwing AsdfDomainError subclasses.
using AsdfEvaluator = std::function<AsdfEvaluation(const Vec&)>;

namespace detail {

/// Projection of the gradient onto the top (n-d) Hessian eigendirections,
/// plus a flag for a degenerate eigenvalue split.
struct ProjectedGradient {
    Vec direction;  // V V^T g
    double residual = 0.0;
    bool degenerate = false;
};

inline ProjectedGradient project_gradient(const AsdfEvaluation& eval, int d) {
    const auto n = eval.gradient.size();
    Eigen::SelfAdjointEigenSolver<Mat> solver(eval.hessian);
    if (solver.info() != Eigen::Success)
        throw EigenFailureError("scgd_step: Hessian eigensolver failed");
    const Vec& evals = solver.eigenvalues();  // ascending
    // top n-d eigenvectors = columns d..n-1 in ascending order
    Mat v = solver.eigenvectors().rightCols(n - d);
    ProjectedGradient out;
    out.direction = v * (v.transpose() * eval.gradient);
    out.residual = out.direction.norm();
    double scale = std::max(std::abs(evals[n - 1]), 1.0);
    out.degenerate = d < n && (evals[d] - evals[d - 1]) < 1e-12 * scale;
    return out;
}

}  // namespace detail

/// One subspace-constrained step: project the gradient onto the span of the
/// top (n-d) Hessian eigenvectors and move against it. With backtracking on,
/// the step halves (down to 1e-8) until the value does not increase. Returns
/// the next point and the projected-gradient norm at x.
inline std::pair<Vec, double> scgd_step(const AsdfEvaluator& evaluate,
                                        const AsdfEvaluation& at_x, const Vec& x,
                                        const DescentConfig& config) {
    detail::ProjectedGradient pg = detail::project_gradient(at_x, config.intrinsic_dim);
    if (pg.residual <= config.tolerance) return {x, pg.residual};

    double eta = config.step_size;
    Vec next = x - eta * pg.direction;
    if (config.backtracking) {
        while (eta > 1e-8) {
            bool ok = false;
            try {
                ok = evaluate(next).value <= at_x.value;
            } catch (const AsdfDomainError&) {
                ok = false;  // stepped out of the domain: shrink
            }
            if (ok) break;
            eta *= 0.5;
            next = x - eta * pg.direction;
        }
    }
    return {next, pg.residual};
}

/// Iterates one mesh point to its trace. Domain errors freeze the trajectory
/// at the last valid point (status LeftDomain).
inline DescentTrace descend_point(const AsdfEvaluator& evaluate, const Vec& start,
                                  const DescentConfig& config) {
    config.check();
    DescentTrace trace;
    Vec x = start;
    trace.final_point = x;
    for (int iter = 1; iter <= config.max_iters; ++iter) {
        AsdfEvaluation eval;
        try {
            eval = evaluate(x);
        } catch (const AsdfDomainError&) {
            trace.status = DescentStatus::LeftDomain;
            trace.iterations = iter;
            return trace;
        }
        detail::ProjectedGradient pg =
            detail::project_gradient(eval, config.intrinsic_dim);
        trace.degenerate_split = trace.degenerate_split || pg.degenerate;
        trace.residual = pg.residual;
        trace.iterations = iter;
        if (pg.residual <= config.tolerance) {
            trace.converged = true;
            trace.status = DescentStatus::Converged;
            trace.final_point = x;
            return trace;
        }

        double eta = config.step_size;
        Vec next = x - eta * pg.direction;
        if (config.backtracking) {
            while (eta > 1e-8) {
                bool ok = false;
                try {
                    ok = evaluate(next).value <= eval.value;
                } catch (const AsdfDomainError&) {
                    ok = false;
                }
                if (ok) break;
                eta *= 0.5;
                next = x - eta * pg.direction;
            }
        }
        x = next;
        trace.final_point = x;
    }
    trace.status = DescentStatus::MaxIters;
    return trace;
}

/// Runs descent over every mesh point, optionally across threads. Traces are
/// written by mesh index, so the result order (and every value in it) is
/// independent of scheduling.
inline std::vector<DescentTrace> run_descent(const AsdfEvaluator& evaluate,
                                             const PointCloud& mesh,
                                             const DescentConfig& config,
                                             int threads = 1) {
    if (mesh.empty()) throw std::invalid_argument("run_descent: empty mesh");
    config.check();
    const std::size_t count = mesh.size();
    std::vector<DescentTrace> traces(count);

    if (threads <= 1 || count == 1) {
        for (std::size_t i = 0; i < count; ++i)
            traces[i] = descend_point(evaluate, mesh[i], config);
        return traces;
    }

    std::atomic<std::size_t> cursor{0};
    auto worker = [&] {
        for (std::size_t i = cursor.fetch_add(1); i < count; i = cursor.fetch_add(1))
            traces[i] = descend_point(evaluate, mesh[i], config);
    };
    std::vector<std::thread> pool;
    const int spawn = std::min<int>(threads, static_cast<int>(count));
    pool.reserve(static_cast<std::size_t>(spawn));
    for (int t = 0; t < spawn; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return traces;
}

inline const char* to_string(DescentStatus status) {
    switch (status) {
        case DescentStatus::Converged: return "converged";
        case DescentStatus::MaxIters: return "max_iters";
        case DescentStatus::LeftDomain: return "left_domain";
    }
    return "unknown";
}

}  // namespace ridgecraft
