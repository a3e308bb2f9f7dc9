#pragma once

#include "ridgecraft/geometry.hpp"
#include "ridgecraft/kde.hpp"
#include "ridgecraft/manifold.hpp"
#include "ridgecraft/pca.hpp"
#include "ridgecraft/ridge.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

namespace ridgecraft {

enum class AsdfKind { Kde, Pca };

inline const char* to_string(AsdfKind kind) {
    return kind == AsdfKind::Kde ? "kde" : "pca";
}

/// Tuned default bandwidths per (asdf, manifold); chosen by the sweep in
/// scripts/tune_bandwidths.sh so the benchmark reproduces the reference RMS
/// scale out of the box.
inline double preset_bandwidth(AsdfKind kind, ManifoldKind manifold) {
    if (kind == AsdfKind::Kde) {
        switch (manifold) {
            case ManifoldKind::Circle2D: return 0.03;
            case ManifoldKind::ClosedCurve3D: return 0.03;
            case ManifoldKind::Sphere3D: return 0.05;
        }
    } else {
        switch (manifold) {
            case ManifoldKind::Circle2D: return 0.04;
            case ManifoldKind::ClosedCurve3D: return 0.12;
            case ManifoldKind::Sphere3D: return 0.06;
        }
    }
    throw std::logic_error("unreachable");
}

/// Frame-estimation ball scale for benchmark packets (see build_packet):
/// wider balls correlate neighboring frames so their errors cancel in the
/// blend. Value from the same sweep as the bandwidth presets.
inline constexpr double kPcaFrameScale = 3.0;

struct ExperimentConfig {
    ManifoldSpec spec;
    AsdfKind asdf_kind = AsdfKind::Kde;
    std::size_t n_fit = 1000;
    std::size_t n_mesh = 1000;
    std::size_t n_reference = 10000;
    double noise_sd = 0.05;
    int trials = 20;
    double bandwidth = 0.0;  // 0 -> preset_bandwidth
    double step_size = 0.0;  // 0 -> 0.1 (kde, scaled coords) / 0.25 (pca)
    int max_iters = 200;
    std::uint64_t seed = 1;
    int threads = 1;

    double resolved_bandwidth() const {
        return bandwidth > 0 ? bandwidth : preset_bandwidth(asdf_kind, spec.kind);
    }
    double resolved_step() const {
        if (step_size > 0) return step_size;
        return asdf_kind == AsdfKind::Kde ? 0.1 : 0.25;
    }
    void check() const {
        if (n_fit < 1 || n_mesh < 1 || n_reference < 1 || trials < 1)
            throw std::invalid_argument("ExperimentConfig: counts >= 1");
        if (noise_sd < 0) throw std::invalid_argument("ExperimentConfig: noise_sd >= 0");
        if (max_iters < 1) throw std::invalid_argument("ExperimentConfig: max_iters >= 1");
    }
};

struct ExperimentReport {
    ExperimentConfig config;
    double mean_rms = 0.0;
    std::vector<double> rms_per_trial;
    double convergence_fraction = 0.0;
    double hausdorff_estimate = 0.0;

    void check() const {
        double mean =
            std::accumulate(rms_per_trial.begin(), rms_per_trial.end(), 0.0) /
            static_cast<double>(rms_per_trial.size());
        if (std::abs(mean - mean_rms) > 1e-12)
            throw std::logic_error("ExperimentReport: mean_rms inconsistent");
    }
};

namespace detail {

/// Stop threshold: 1e-7 times the typical gradient norm over (up to) the
/// first 50 mesh points that evaluate cleanly.
inline double derive_tolerance(const AsdfEvaluator& evaluate, const PointCloud& mesh) {
    double acc = 0.0;
    int used = 0;
    const std::size_t probe = std::min<std::size_t>(mesh.size(), 50);
    for (std::size_t i = 0; i < probe; ++i) {
        try {
            acc += evaluate(mesh[i]).gradient.norm();
            ++used;
        } catch (const AsdfDomainError&) {
        }
    }
    if (used == 0) return 1e-7;
    return std::max(1e-12, 1e-7 * acc / used);
}

struct TrialOutcome {
    PointCloud converged_finals;
    std::size_t converged = 0;
    std::size_t total = 0;
};

/// Build the asdf for one fit sample and descend the mesh. KDE descent runs
/// in the kernel-scaled coordinates and the finals are mapped back.
inline TrialOutcome descend_trial(const ExperimentConfig& config,
                                  const PointCloud& fit, const PointCloud& mesh) {
    const int d = config.spec.intrinsic_dim();
    DescentConfig descent;
    descent.intrinsic_dim = d;
    descent.max_iters = config.max_iters;
    descent.step_size = config.resolved_step();

    TrialOutcome outcome;
    outcome.total = mesh.size();
    outcome.converged_finals = PointCloud(mesh.ambient_dim);

    if (config.asdf_kind == AsdfKind::Kde) {
        KdeAsdf asdf(fit, config.resolved_bandwidth(), d);
        const double scale = asdf.coordinate_scale();
        PointCloud scaled_mesh(mesh.ambient_dim);
        for (const Vec& p : mesh.points) scaled_mesh.push_back(p / scale);
        AsdfEvaluator evaluate = [&asdf](const Vec& x) { return asdf.eval_scaled(x); };
        descent.tolerance = derive_tolerance(evaluate, scaled_mesh);
        auto traces = run_descent(evaluate, scaled_mesh, descent, config.threads);
        for (const DescentTrace& t : traces) {
            if (!t.converged) continue;
            ++outcome.converged;
            outcome.converged_finals.push_back(t.final_point * scale);
        }
    } else {
        CylinderPacket packet = build_packet(fit, config.resolved_bandwidth(), d,
                                             /*skip_failed_centers=*/true,
                                             kPcaFrameScale);
        AsdfEvaluator evaluate = [&packet](const Vec& z) {
            return fobar_eval(packet, z);
        };
        descent.tolerance = derive_tolerance(evaluate, mesh);
        auto traces = run_descent(evaluate, mesh, descent, config.threads);
        for (const DescentTrace& t : traces) {
            if (!t.converged) continue;
            ++outcome.converged;
            outcome.converged_finals.push_back(t.final_point);
        }
    }
    return outcome;
}

}  // namespace detail

/// Multi-trial benchmark: per trial, fit a fresh noiseless sample, descend a
/// fresh noisy mesh, measure RMS of the converged finals against the analytic
/// manifold (a sampled reference would floor the RMS at its own nearest
/// neighbor spacing). The Hausdorff estimate uses a fresh reference sample so
/// it also penalizes coverage gaps. Non-converged points are excluded from
/// RMS and show up only in convergence_fraction. Deterministic in
/// (config, seed).
inline ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.check();
    ExperimentReport report;
    report.config = config;

    std::size_t converged = 0, total = 0;
    double hausdorff_acc = 0.0;
    for (int trial = 0; trial < config.trials; ++trial) {
        const std::uint64_t trial_seed = config.seed + static_cast<std::uint64_t>(trial);
        PointCloud fit = sample_manifold(config.spec, config.n_fit, trial_seed * 10 + 1);
        PointCloud mesh = add_gaussian_noise(
            sample_manifold(config.spec, config.n_mesh, trial_seed * 10 + 2),
            config.noise_sd, trial_seed * 10 + 3);
        PointCloud reference =
            sample_manifold(config.spec, config.n_reference, trial_seed * 10 + 4);

        detail::TrialOutcome outcome = detail::descend_trial(config, fit, mesh);
        converged += outcome.converged;
        total += outcome.total;
        // A trial where nothing converged still needs a finite RMS entry;
        // fall back to the raw mesh so the failure is loud, not hidden.
        const PointCloud& scored =
            outcome.converged_finals.empty() ? mesh : outcome.converged_finals;
        report.rms_per_trial.push_back(rms_distance(scored, config.spec));
        hausdorff_acc += hausdorff_distance(scored, reference);
    }

    report.mean_rms =
        std::accumulate(report.rms_per_trial.begin(), report.rms_per_trial.end(), 0.0) /
        static_cast<double>(report.rms_per_trial.size());
    report.convergence_fraction =
        static_cast<double>(converged) / static_cast<double>(total);
    report.hausdorff_estimate = hausdorff_acc / config.trials;
    report.check();
    return report;
}

struct RatePoint {
    double bandwidth = 0.0;
    double hausdorff = 0.0;
};

struct RateStudy {
    std::vector<RatePoint> points;
    double slope = 0.0;  // of log(hausdorff) against log(bandwidth)
};

/// One-sided Hausdorff rate sweep: for each bandwidth, fit on a noiseless
/// sample (size scaled so sampling density tracks the bandwidth), descend a
/// noiseless on-manifold mesh, and record the worst analytic distance of a
/// converged final to the manifold. The slope comes from a least-squares fit
/// in log-log coordinates.
inline RateStudy rate_study(const ManifoldSpec& spec, AsdfKind kind,
                            const std::vector<double>& bandwidths,
                            ExperimentConfig base) {
    if (bandwidths.size() < 3)
        throw std::invalid_argument("rate_study: need >= 3 bandwidths");
    for (std::size_t i = 1; i < bandwidths.size(); ++i)
        if (!(bandwidths[i] < bandwidths[i - 1]))
            throw std::invalid_argument("rate_study: bandwidths must decrease");

    base.spec = spec;
    base.asdf_kind = kind;
    base.noise_sd = 0.0;
    const double d = spec.intrinsic_dim();
    const double exponent = kind == AsdfKind::Kde ? d : d + 0.5;
    const double b_max = bandwidths.front();

    RateStudy study;
    for (std::size_t i = 0; i < bandwidths.size(); ++i) {
        const double b = bandwidths[i];
        ExperimentConfig config = base;
        config.bandwidth = b;
        config.n_fit = static_cast<std::size_t>(
            std::lround(static_cast<double>(base.n_fit) * std::pow(b_max / b, exponent)));
        const std::uint64_t sweep_seed =
            config.seed + 1000 * static_cast<std::uint64_t>(i);

        PointCloud fit = sample_manifold(spec, config.n_fit, sweep_seed + 1);
        PointCloud mesh = sample_manifold(spec, config.n_mesh, sweep_seed + 2);
        detail::TrialOutcome outcome = detail::descend_trial(config, fit, mesh);

        double worst = 0.0;
        for (const Vec& p : outcome.converged_finals.points)
            worst = std::max(worst, distance_to_manifold(spec, p));
        study.points.push_back({b, worst});
    }

    // least squares slope over (log b, log h)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto count = static_cast<double>(study.points.size());
    for (const RatePoint& p : study.points) {
        const double x = std::log(p.bandwidth), y = std::log(p.hausdorff);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    study.slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    return study;
}

inline nlohmann::json config_to_json(const ExperimentConfig& config) {
    const char* manifold = config.spec.kind == ManifoldKind::Circle2D ? "circle"
                           : config.spec.kind == ManifoldKind::Sphere3D ? "sphere"
                                                                        : "curve";
    return nlohmann::json{{"manifold", manifold},
                          {"scale", config.spec.scale},
                          {"asdf", to_string(config.asdf_kind)},
                          {"n_fit", config.n_fit},
                          {"n_mesh", config.n_mesh},
                          {"n_reference", config.n_reference},
                          {"noise_sd", config.noise_sd},
                          {"trials", config.trials},
                          {"bandwidth", config.resolved_bandwidth()},
                          {"step_size", config.resolved_step()},
                          {"max_iters", config.max_iters},
                          {"seed", config.seed}};
}

inline nlohmann::json report_to_json(const ExperimentReport& report) {
    return nlohmann::json{{"config", config_to_json(report.config)},
                          {"mean_rms", report.mean_rms},
                          {"rms_per_trial", report.rms_per_trial},
                          {"convergence_fraction", report.convergence_fraction},
                          {"hausdorff_estimate", report.hausdorff_estimate}};
}

inline void write_rms_csv(const ExperimentReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_rms_csv: cannot open " + path);
    out.precision(17);
    out << "trial,rms\n";
    for (std::size_t i = 0; i < report.rms_per_trial.size(); ++i)
        out << i << ',' << report.rms_per_trial[i] << '\n';
}

inline void write_rate_csv(const RateStudy& study, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_rate_csv: cannot open " + path);
    out.precision(17);
    out << "bandwidth,hausdorff\n";
    for (const RatePoint& p : study.points)
        out << p.bandwidth << ',' << p.hausdorff << '\n';
    out << "# slope " << study.slope << '\n';
}

}  // namespace ridgecraft
