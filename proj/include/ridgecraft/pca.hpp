#pragma once

#include "ridgecraft/bump.hpp"
#include "ridgecraft/net.hpp"
#include "ridgecraft/types.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

namespace ridgecraft {

/// Estimated tangent space at a point: n x d orthonormal basis plus the
/// eigenvalue gap of the local covariance that produced it.
struct TangentFrame {
    Vec center;
    Mat basis;             // n x d, orthonormal columns
    double eigen_gap = 0;  // lambda_d - lambda_{d+1}
};

/// Local PCA about `center` over the Euclidean ball of radius tau_bar*sqrt(2)
/// (circumscribes the oriented cylinder, which we cannot form before knowing
/// the frame). Covariance is taken about the center itself, not the
/// neighborhood mean. Column signs are fixed by making the largest-magnitude
/// entry of each column positive.
inline TangentFrame estimate_tangent(const PointCloud& cloud, const Vec& center,
                                     double tau_bar, int intrinsic_dim) {
    const int n = cloud.ambient_dim;
    const int d = intrinsic_dim;
    if (!(tau_bar > 0)) throw std::invalid_argument("estimate_tangent: tau_bar > 0");
    if (d < 1 || d >= n)
        throw std::invalid_argument("estimate_tangent: need 1 <= d < ambient_dim");
    if (center.size() != n)
        throw std::invalid_argument("estimate_tangent: dimension mismatch");

    const double radius2 = 2.0 * tau_bar * tau_bar;
    Mat cov = Mat::Zero(n, n);
    std::size_t count = 0;
    for (const Vec& p : cloud.points) {
        Vec diff = p - center;
        if (diff.squaredNorm() > radius2) continue;
        cov.noalias() += diff * diff.transpose();
        ++count;
    }
    if (count < static_cast<std::size_t>(d) + 1)
        throw InsufficientNeighborsError(
            "estimate_tangent: " + std::to_string(count) + " neighbors, need " +
            std::to_string(d + 1));
    cov /= static_cast<double>(count);

    Eigen::SelfAdjointEigenSolver<Mat> solver(cov);
    if (solver.info() != Eigen::Success)
        throw EigenFailureError("estimate_tangent: eigensolver did not converge");
    const Vec& evals = solver.eigenvalues();  // ascending
    const double lambda_top = evals[n - 1];
    const double gap = evals[n - d] - evals[n - d - 1];
    if (gap < 1e-12 * lambda_top)
        throw DegenerateSpectrumError("estimate_tangent: spectral gap below 1e-12");

    TangentFrame frame;
    frame.center = center;
    frame.eigen_gap = gap;
    frame.basis.resize(n, d);
    for (int k = 0; k < d; ++k) {
        Vec col = solver.eigenvectors().col(n - 1 - k);
        int arg_max = 0;
        col.cwiseAbs().maxCoeff(&arg_max);
        if (col[arg_max] < 0) col = -col;
        frame.basis.col(k) = col;
    }
    return frame;
}

/// Oriented cylinder tau_bar * (B_d x B_{n-d}) in the frame at its center.
struct Cylinder {
    Vec center;
    TangentFrame frame;
    double tau_bar = 0;

    bool contains(const Vec& z) const {
        Vec diff = z - center;
        Vec tangential = frame.basis.transpose() * diff;
        if (tangential.norm() > tau_bar) return false;
        Vec normal = diff - frame.basis * tangential;
        return normal.norm() <= tau_bar;
    }
};

/// Immutable collection of cylinders sharing one tau_bar, with a uniform
/// cell grid over centers so member lookup avoids a full scan.
class CylinderPacket {
  public:
    CylinderPacket(std::vector<Cylinder> cylinders, double tau_bar,
                   bool coverage_ok = true)
        : cylinders_(std::move(cylinders)), tau_bar_(tau_bar),
          coverage_ok_(coverage_ok) {
        if (!(tau_bar_ > 0))
            throw std::invalid_argument("CylinderPacket: tau_bar > 0");
        if (cylinders_.empty())
            throw std::invalid_argument("CylinderPacket: no cylinders");
        for (const Cylinder& c : cylinders_)
            if (c.tau_bar != tau_bar_)
                throw std::invalid_argument("CylinderPacket: mixed tau_bar");
        cell_ = 2.0 * tau_bar_;
        for (std::size_t i = 0; i < cylinders_.size(); ++i)
            grid_[cell_key(cylinders_[i].center)].push_back(i);
    }

    const std::vector<Cylinder>& cylinders() const { return cylinders_; }
    double tau_bar() const { return tau_bar_; }
    bool coverage_ok() const { return coverage_ok_; }
    int ambient_dim() const { return static_cast<int>(cylinders_[0].center.size()); }
    int intrinsic_dim() const { return static_cast<int>(cylinders_[0].frame.basis.cols()); }

    /// Indices (ascending) of cylinders whose center lies within sqrt(2)
    /// tau_bar + one cell of z -- a superset of the cylinders containing z.
    std::vector<std::size_t> candidates(const Vec& z) const {
        std::vector<std::size_t> out;
        const int n = static_cast<int>(z.size());
        std::vector<std::int64_t> base(n);
        for (int j = 0; j < n; ++j)
            base[j] = static_cast<std::int64_t>(std::floor(z[j] / cell_));
        std::vector<int> offset(n, -1);
        while (true) {
            std::uint64_t key = 14695981039346656037ull;
            for (int j = 0; j < n; ++j) {
                auto v = static_cast<std::uint64_t>(base[j] + offset[j]);
                key = (key ^ v) * 1099511628211ull;
            }
            auto it = grid_.find(key);
            if (it != grid_.end())
                out.insert(out.end(), it->second.begin(), it->second.end());
            int j = 0;
            for (; j < n; ++j) {
                if (++offset[j] <= 1) break;
                offset[j] = -1;
            }
            if (j == n) break;
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Indices (ascending) of cylinders containing z.
    std::vector<std::size_t> members(const Vec& z) const {
        std::vector<std::size_t> out;
        for (std::size_t i : candidates(z))
            if (cylinders_[i].contains(z)) out.push_back(i);
        return out;
    }

  private:
    std::uint64_t cell_key(const Vec& p) const {
        std::uint64_t key = 14695981039346656037ull;
        for (int j = 0; j < p.size(); ++j) {
            auto v = static_cast<std::uint64_t>(
                static_cast<std::int64_t>(std::floor(p[j] / cell_)));
            key = (key ^ v) * 1099511628211ull;
        }
        return key;
    }

    std::vector<Cylinder> cylinders_;
    double tau_bar_;
    bool coverage_ok_;
    double cell_ = 0;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid_;
};

/// Net the cloud at covering tau_bar/2 with separation tau_bar/2.9, estimate
/// a frame at every center, and record whether every construction point ended
/// up inside at least one cylinder. A point with no neighbor inside the PCA
/// ball (radius tau_bar*sqrt(2)) makes the cloud too sparse: NetInfeasible.
/// With skip_failed_centers, a center whose tangent estimate degenerates is
/// dropped instead of aborting the build (coverage records the hole); at
/// least one center must survive.
///
/// frame_radius_scale widens the PCA ball used for frame estimation relative
/// to the cylinder radius. A wider ball makes neighboring frames vary
/// smoothly, so their signed plane-height errors cancel in the blended asdf
/// instead of accumulating; at moderate sample sizes this cuts the ridge
/// error substantially.
inline CylinderPacket build_packet(const PointCloud& cloud, double tau_bar,
                                   int intrinsic_dim,
                                   bool skip_failed_centers = false,
                                   double frame_radius_scale = 1.0) {
    if (!(frame_radius_scale >= 1.0))
        throw std::invalid_argument("build_packet: frame_radius_scale >= 1");
    if (cloud.size() < 2) throw std::invalid_argument("build_packet: >= 2 points");
    if (!skip_failed_centers) {
        // Strict mode: a point with no neighbor inside the PCA ball can never
        // yield a usable frame, so fail fast with a clear message.
        const double gap_limit2 = 2.0 * tau_bar * tau_bar;
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            bool has_close = false;
            for (std::size_t j = 0; j < cloud.size(); ++j) {
                if (i != j && (cloud[i] - cloud[j]).squaredNorm() <= gap_limit2) {
                    has_close = true;
                    break;
                }
            }
            if (!has_close)
                throw NetInfeasibleError("build_packet: cloud too sparse for tau_bar " +
                                         std::to_string(tau_bar));
        }
    }

    NetResult net = build_net(cloud, tau_bar / 2.0, tau_bar / 2.9);
    std::vector<Cylinder> cylinders;
    cylinders.reserve(net.centers.size());
    for (const Vec& c : net.centers.points) {
        Cylinder cyl;
        cyl.center = c;
        cyl.tau_bar = tau_bar;
        try {
            cyl.frame = estimate_tangent(cloud, c, tau_bar * frame_radius_scale,
                                         intrinsic_dim);
        } catch (const InsufficientNeighborsError&) {
            if (!skip_failed_centers) throw;
            continue;
        } catch (const DegenerateSpectrumError&) {
            if (!skip_failed_centers) throw;
            continue;
        }
        cylinders.push_back(std::move(cyl));
    }
    if (cylinders.empty())
        throw NetInfeasibleError("build_packet: every center failed tangent estimation");

    CylinderPacket packet(std::move(cylinders), tau_bar, true);
    bool covered = true;
    for (const Vec& p : cloud.points)
        if (packet.members(p).empty()) { covered = false; break; }
    if (covered) return packet;
    return CylinderPacket(packet.cylinders(), tau_bar, false);
}

/// One validation condition: pass iff margin >= 0. Margins are clamped to
/// +/- 1e12 so a vacuous condition (no intersecting pairs) stays finite.
struct ConditionCheck {
    bool pass = true;
    double margin = 1e12;
};

struct PacketValidationReport {
    ConditionCheck count_bound;        // 1
    ConditionCheck center_separation;  // 2a
    ConditionCheck net_coverage;       // 2b
    ConditionCheck rotation_bound;     // 2c
    ConditionCheck translation_bound;  // 2d

    bool all_pass() const {
        return count_bound.pass && center_separation.pass && net_coverage.pass &&
               rotation_bound.pass && translation_bound.pass;
    }
};

struct PacketValidationOptions {
    double kappa = 10.0;          // count bound multiplier
    bool reach_power = false;     // count bound denominator: reach^d vs tau_bar^d
    double rotation_c = 24.0;     // sin(theta_1) <= rotation_c * sqrt(d) * tau_bar/tau
};

namespace detail {

/// Orthonormal basis of the orthogonal complement of `basis` (n x (n-d)).
inline Mat normal_complement(const Mat& basis) {
    const auto n = basis.rows();
    const auto d = basis.cols();
    Eigen::HouseholderQR<Mat> qr(basis);
    Mat q = qr.householderQ();
    return q.rightCols(n - d);
}

/// Deterministic sample of a cylinder: 5 levels per axis over the tangential
/// and normal factor balls, products outside either ball discarded.
inline std::vector<Vec> cylinder_grid(const Cylinder& cyl) {
    const auto n = cyl.center.size();
    const auto d = cyl.frame.basis.cols();
    const Mat normal = normal_complement(cyl.frame.basis);
    const double levels[5] = {-1.0, -0.5, 0.0, 0.5, 1.0};

    auto ball_points = [&](Eigen::Index dim) {
        std::vector<Vec> pts;
        std::vector<int> idx(static_cast<std::size_t>(dim), 0);
        while (true) {
            Vec p(dim);
            for (Eigen::Index j = 0; j < dim; ++j)
                p[j] = levels[idx[static_cast<std::size_t>(j)]] * cyl.tau_bar;
            if (p.norm() <= cyl.tau_bar) pts.push_back(std::move(p));
            Eigen::Index j = 0;
            for (; j < dim; ++j) {
                if (++idx[static_cast<std::size_t>(j)] <= 4) break;
                idx[static_cast<std::size_t>(j)] = 0;
            }
            if (j == dim) break;
        }
        return pts;
    };

    std::vector<Vec> tangential = ball_points(d);
    std::vector<Vec> normals = ball_points(n - d);
    std::vector<Vec> out;
    out.reserve(tangential.size() * normals.size());
    for (const Vec& a : tangential)
        for (const Vec& b : normals)
            out.push_back(cyl.center + cyl.frame.basis * a + normal * b);
    return out;
}

/// Grid witness for cylinder intersection (checked in both directions).
inline bool cylinders_intersect(const Cylinder& a, const std::vector<Vec>& grid_a,
                                const Cylinder& b, const std::vector<Vec>& grid_b) {
    for (const Vec& p : grid_b)
        if (a.contains(p)) return true;
    for (const Vec& p : grid_a)
        if (b.contains(p)) return true;
    return false;
}

/// Lattice of the d-ball of radius `radius` at the given step.
inline std::vector<Vec> ball_lattice(Eigen::Index dim, double radius, double step) {
    const int half = static_cast<int>(std::floor(radius / step));
    std::vector<Vec> pts;
    std::vector<int> idx(static_cast<std::size_t>(dim), -half);
    while (true) {
        Vec p(dim);
        for (Eigen::Index j = 0; j < dim; ++j)
            p[j] = step * idx[static_cast<std::size_t>(j)];
        if (p.norm() <= radius) pts.push_back(std::move(p));
        Eigen::Index j = 0;
        for (; j < dim; ++j) {
            if (++idx[static_cast<std::size_t>(j)] <= half) break;
            idx[static_cast<std::size_t>(j)] = -half;
        }
        if (j == dim) break;
    }
    return pts;
}

}  // namespace detail

/// Checks the five packet conditions against a known reach and volume:
///   1   cylinder count <= kappa * V / tau_bar^d
///   2a  intersecting centers separated by >= tau_bar/3 after projection onto
///       the reference cross-section plane
///   2b  projected intersecting centers (plus the origin) form a tau_bar/2
///       net of the cross-section ball, tested on a tau_bar/20 lattice whose
///       resolution slack tau_bar*sqrt(d)/20 is folded into the margin
///   2c  largest principal angle between intersecting cross-sections has
///       sin(theta_1) <= 24 sqrt(d) tau_bar / tau
///   2d  normal offset of an intersecting center from the reference plane is
///       <= 4 tau_bar^2 / tau
/// Failures are carried in the report, never thrown.
inline PacketValidationReport validate_packet(
    const CylinderPacket& packet, double reach, double volume,
    const PacketValidationOptions& opts = {}) {
    if (!(reach > 0) || !(volume > 0))
        throw std::invalid_argument("validate_packet: reach, volume > 0");

    const double tau_bar = packet.tau_bar();
    const auto& cyls = packet.cylinders();
    const int d = packet.intrinsic_dim();
    const double sqrt_d = std::sqrt(static_cast<double>(d));
    PacketValidationReport report;

    const double denom = opts.reach_power ? std::pow(reach, d) : std::pow(tau_bar, d);
    report.count_bound.margin =
        opts.kappa * volume / denom - static_cast<double>(cyls.size());

    // Intersecting pairs, pruned by the center-distance diameter bound.
    std::vector<std::vector<Vec>> grids(cyls.size());
    for (std::size_t i = 0; i < cyls.size(); ++i)
        grids[i] = detail::cylinder_grid(cyls[i]);
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    const double prune2 = 8.0 * tau_bar * tau_bar;
    for (std::size_t i = 0; i < cyls.size(); ++i)
        for (std::size_t j = i + 1; j < cyls.size(); ++j) {
            if ((cyls[i].center - cyls[j].center).squaredNorm() > prune2) continue;
            if (detail::cylinders_intersect(cyls[i], grids[i], cyls[j], grids[j]))
                pairs.emplace_back(i, j);
        }

    std::vector<std::vector<std::size_t>> neighbors(cyls.size());
    for (auto [i, j] : pairs) {
        neighbors[i].push_back(j);
        neighbors[j].push_back(i);
    }

    const double rotation_limit = opts.rotation_c * sqrt_d * tau_bar / reach;
    const double translation_limit = 4.0 * tau_bar * tau_bar / reach;
    for (auto [i, j] : pairs) {
        for (auto [a, b] : {std::pair{i, j}, std::pair{j, i}}) {
            const Mat& basis = cyls[a].frame.basis;
            Vec diff = cyls[b].center - cyls[a].center;
            Vec tangential = basis.transpose() * diff;
            report.center_separation.margin = std::min(
                report.center_separation.margin, tangential.norm() - tau_bar / 3.0);
            report.translation_bound.margin =
                std::min(report.translation_bound.margin,
                         translation_limit - (diff - basis * tangential).norm());
        }
        Mat overlap = cyls[i].frame.basis.transpose() * cyls[j].frame.basis;
        Eigen::JacobiSVD<Mat> svd(overlap);
        double cos_theta = std::min(1.0, svd.singularValues().minCoeff());
        double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
        report.rotation_bound.margin =
            std::min(report.rotation_bound.margin, rotation_limit - sin_theta);
    }

    const std::vector<Vec> lattice =
        detail::ball_lattice(d, tau_bar, tau_bar / 20.0);
    const double net_limit = tau_bar / 2.0 + tau_bar * sqrt_d / 20.0;
    for (std::size_t i = 0; i < cyls.size(); ++i) {
        std::vector<Vec> projected;
        projected.push_back(Vec::Zero(d));
        for (std::size_t j : neighbors[i])
            projected.push_back(cyls[i].frame.basis.transpose() *
                                (cyls[j].center - cyls[i].center));
        double worst = 0.0;
        for (const Vec& g : lattice) {
            double best = std::numeric_limits<double>::max();
            for (const Vec& p : projected) best = std::min(best, (g - p).norm());
            worst = std::max(worst, best);
        }
        report.net_coverage.margin =
            std::min(report.net_coverage.margin, net_limit - worst);
    }

    for (ConditionCheck* check :
         {&report.count_bound, &report.center_separation, &report.net_coverage,
          &report.rotation_bound, &report.translation_bound}) {
        check->margin = std::clamp(check->margin, -1e12, 1e12);
        check->pass = check->margin >= 0.0;
    }
    return report;
}

/// F^o-bar: bump-weighted average of squared normal distances over the
/// cylinders containing z, with analytic gradient and Hessian of the
/// quotient. phi_i is the exact quadratic 'squared distance to cyl_i's
/// cross-section plane'; the weight is theta applied to the tangential
/// coordinates scaled by 1/(2 tau_bar).
inline AsdfEvaluation fobar_eval(const CylinderPacket& packet, const Vec& z) {
    const int n = packet.ambient_dim();
    if (z.size() != n) throw std::invalid_argument("fobar_eval: dimension mismatch");
    const double tau_bar = packet.tau_bar();

    const std::vector<std::size_t> members = packet.members(z);
    if (members.empty())
        throw OutsidePacketError("fobar_eval: point outside every cylinder");

    double weight_sum = 0.0, weighted_phi = 0.0;
    Vec grad_w_sum = Vec::Zero(n), grad_p_sum = Vec::Zero(n);
    Mat hess_w_sum = Mat::Zero(n, n), hess_p_sum = Mat::Zero(n, n);

    for (std::size_t idx : members) {
        const Cylinder& cyl = packet.cylinders()[idx];
        const Mat& basis = cyl.frame.basis;
        Vec diff = z - cyl.center;
        Vec tangential = basis.transpose() * diff;
        Vec residual = diff - basis * tangential;

        const double phi = residual.squaredNorm();
        Vec grad_phi = 2.0 * residual;
        Mat hess_phi = 2.0 * (Mat::Identity(n, n) - basis * basis.transpose());

        BumpEval bump = bump_theta(tangential / (2.0 * tau_bar));
        const double w = bump.value;
        Vec grad_w = basis * bump.gradient / (2.0 * tau_bar);
        Mat hess_w =
            basis * bump.hessian * basis.transpose() / (4.0 * tau_bar * tau_bar);

        weight_sum += w;
        weighted_phi += w * phi;
        grad_w_sum += grad_w;
        grad_p_sum += w * grad_phi + phi * grad_w;
        hess_w_sum += hess_w;
        hess_p_sum += w * hess_phi + grad_phi * grad_w.transpose() +
                      grad_w * grad_phi.transpose() + phi * hess_w;
    }

    if (!(weight_sum > 0))
        throw ZeroWeightError("fobar_eval: all bump weights vanished");

    AsdfEvaluation out;
    out.value = weighted_phi / weight_sum;
    out.gradient = (grad_p_sum - out.value * grad_w_sum) / weight_sum;
    Mat hess = (hess_p_sum - out.value * hess_w_sum -
                out.gradient * grad_w_sum.transpose() -
                grad_w_sum * out.gradient.transpose()) /
               weight_sum;
    out.hessian = 0.5 * (hess + hess.transpose());
    return out;
}

/// Half-width schedule tau_bar = c * N^(-1/(d+epsilon)).
inline double pca_schedule(std::size_t n_samples, int intrinsic_dim, double epsilon,
                           double c = 1.0) {
    if (n_samples < 2) throw std::invalid_argument("pca_schedule: N >= 2");
    if (!(epsilon > 0)) throw std::invalid_argument("pca_schedule: epsilon > 0");
    return c * std::pow(static_cast<double>(n_samples),
                        -1.0 / (intrinsic_dim + epsilon));
}

inline nlohmann::json packet_to_json(const CylinderPacket& packet) {
    nlohmann::json cylinders = nlohmann::json::array();
    for (const Cylinder& cyl : packet.cylinders()) {
        nlohmann::json entry;
        entry["center"] = std::vector<double>(cyl.center.data(),
                                              cyl.center.data() + cyl.center.size());
        entry["basis"] = std::vector<double>(
            cyl.frame.basis.data(), cyl.frame.basis.data() + cyl.frame.basis.size());
        entry["eigen_gap"] = cyl.frame.eigen_gap;
        cylinders.push_back(std::move(entry));
    }
    return nlohmann::json{{"tau_bar", packet.tau_bar()},
                          {"cylinders", std::move(cylinders)},
                          {"ambient_dim", packet.ambient_dim()},
                          {"intrinsic_dim", packet.intrinsic_dim()}};
}

inline CylinderPacket packet_from_json(const nlohmann::json& j) {
    const double tau_bar = j.at("tau_bar").get<double>();
    const int n = j.at("ambient_dim").get<int>();
    const int d = j.at("intrinsic_dim").get<int>();
    std::vector<Cylinder> cylinders;
    for (const auto& entry : j.at("cylinders")) {
        Cylinder cyl;
        auto center = entry.at("center").get<std::vector<double>>();
        auto basis = entry.at("basis").get<std::vector<double>>();
        if (static_cast<int>(center.size()) != n ||
            static_cast<int>(basis.size()) != n * d)
            throw std::invalid_argument("packet_from_json: shape mismatch");
        cyl.center = Eigen::Map<const Vec>(center.data(), n);
        cyl.frame.center = cyl.center;
        cyl.frame.basis = Eigen::Map<const Mat>(basis.data(), n, d);
        cyl.frame.eigen_gap = entry.at("eigen_gap").get<double>();
        cyl.tau_bar = tau_bar;
        cylinders.push_back(std::move(cyl));
    }
    return CylinderPacket(std::move(cylinders), tau_bar);
}

}  // namespace ridgecraft
