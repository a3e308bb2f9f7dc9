// ridgecraft CLI: sampling, ridge descent, packet validation and the
// benchmark harness behind one binary.
//
// Exit codes: 0 success, 1 runtime failure, 2 validation failure, 64 usage.

#include "ridgecraft/csv.hpp"
#include "ridgecraft/geometry.hpp"
#include "ridgecraft/kde.hpp"
#include "ridgecraft/manifold.hpp"
#include "ridgecraft/metrics.hpp"
#include "ridgecraft/pca.hpp"
#include "ridgecraft/ridge.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace {

constexpr const char* kVersion = "0.1.0";

using ridgecraft::AsdfKind;
using ridgecraft::ManifoldKind;
using ridgecraft::ManifoldSpec;
using ridgecraft::PointCloud;
using ridgecraft::Vec;

int default_threads() {
    if (const char* env = std::getenv("RIDGECRAFT_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

ManifoldKind parse_manifold(const std::string& name) {
    if (name == "circle") return ManifoldKind::Circle2D;
    if (name == "curve") return ManifoldKind::ClosedCurve3D;
    if (name == "sphere") return ManifoldKind::Sphere3D;
    throw CLI::ValidationError("--manifold", "expected circle|curve|sphere");
}

/// Writes JSON to `path` atomically: temp file in the same directory, then
/// rename.
void write_json_atomic(const nlohmann::json& j, const std::string& path) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
        out << j.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
}

struct ManifestClock {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void write(const std::string& command, const nlohmann::json& config,
               std::uint64_t seed, const std::vector<std::string>& outputs,
               const std::string& path) const {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        write_json_atomic(nlohmann::json{{"command", command},
                                         {"config", config},
                                         {"seed", seed},
                                         {"version", kVersion},
                                         {"outputs", outputs},
                                         {"duration_seconds", secs}},
                          path);
    }
};

// ---------------------------------------------------------------- sample

struct SampleArgs {
    std::string manifold = "circle";
    double scale = 1.0;
    std::size_t count = 1000;
    std::uint64_t seed = 1;
    double noise_sd = 0.0;
    std::string out;
};

int run_sample(const SampleArgs& args) {
    ManifestClock clock;
    ManifoldSpec spec(parse_manifold(args.manifold), args.scale);
    PointCloud cloud = ridgecraft::sample_manifold(spec, args.count, args.seed * 4 + 1);
    if (args.noise_sd > 0)
        cloud = ridgecraft::add_gaussian_noise(cloud, args.noise_sd, args.seed * 4 + 2);
    ridgecraft::write_cloud_csv(cloud, args.out);
    clock.write("sample",
                {{"manifold", args.manifold},
                 {"scale", args.scale},
                 {"count", args.count},
                 {"noise_sd", args.noise_sd}},
                args.seed, {args.out}, args.out + ".manifest.json");
    return 0;
}

// ---------------------------------------------------------------- descend

struct DescendArgs {
    std::string asdf = "kde";
    std::string fit_path, mesh_path, out;
    double bandwidth = 0.05;
    double frame_scale = ridgecraft::kPcaFrameScale;
    double step = 0.0;
    double tolerance = 0.0;  // 0 -> derived from initial gradients
    int max_iters = 200;
    int intrinsic_dim = 1;
    double reach = 0.0, volume = 0.0;  // both > 0 enables packet validation
    int threads = 0;
    std::uint64_t seed = 1;
};

void write_trace_csv(const std::vector<ridgecraft::DescentTrace>& traces,
                     int ambient_dim, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.precision(17);
    for (int j = 0; j < ambient_dim; ++j) out << "x" << j << ',';
    out << "iterations,converged,residual,status\n";
    for (const auto& t : traces) {
        for (int j = 0; j < ambient_dim; ++j) out << t.final_point[j] << ',';
        out << t.iterations << ',' << (t.converged ? 1 : 0) << ',' << t.residual
            << ',' << ridgecraft::to_string(t.status) << '\n';
    }
}

int run_descend(const DescendArgs& args) {
    ManifestClock clock;
    PointCloud fit = ridgecraft::read_cloud_csv(args.fit_path);
    PointCloud mesh = ridgecraft::read_cloud_csv(args.mesh_path);
    if (fit.ambient_dim != mesh.ambient_dim)
        throw CLI::ValidationError("--mesh", "fit/mesh dimension mismatch");
    if (args.intrinsic_dim < 1 || args.intrinsic_dim >= fit.ambient_dim)
        throw CLI::ValidationError("--d", "need 1 <= d < ambient dimension");

    const int threads = args.threads > 0 ? args.threads : default_threads();
    ridgecraft::DescentConfig config;
    config.intrinsic_dim = args.intrinsic_dim;
    config.max_iters = args.max_iters;

    std::vector<ridgecraft::DescentTrace> traces;
    PointCloud finals(fit.ambient_dim);
    if (args.asdf == "kde") {
        ridgecraft::KdeAsdf asdf(fit, args.bandwidth, args.intrinsic_dim);
        const double scale = asdf.coordinate_scale();
        PointCloud scaled(fit.ambient_dim);
        for (const Vec& p : mesh.points) scaled.push_back(p / scale);
        ridgecraft::AsdfEvaluator evaluate = [&asdf](const Vec& x) {
            return asdf.eval_scaled(x);
        };
        config.step_size = args.step > 0 ? args.step : 0.1;
        config.tolerance = args.tolerance > 0
                               ? args.tolerance
                               : ridgecraft::detail::derive_tolerance(evaluate, scaled);
        traces = ridgecraft::run_descent(evaluate, scaled, config, threads);
        for (auto& t : traces) t.final_point *= scale;
    } else if (args.asdf == "pca") {
        ridgecraft::CylinderPacket packet = ridgecraft::build_packet(
            fit, args.bandwidth, args.intrinsic_dim, /*skip_failed_centers=*/true,
            args.frame_scale);
        if (args.reach > 0 && args.volume > 0) {
            auto report = ridgecraft::validate_packet(packet, args.reach, args.volume);
            if (!report.all_pass()) {
                std::cerr << "warning: packet fails validation:";
                if (!report.count_bound.pass) std::cerr << " count_bound";
                if (!report.center_separation.pass) std::cerr << " center_separation";
                if (!report.net_coverage.pass) std::cerr << " net_coverage";
                if (!report.rotation_bound.pass) std::cerr << " rotation_bound";
                if (!report.translation_bound.pass) std::cerr << " translation_bound";
                std::cerr << '\n';
            }
        }
        ridgecraft::AsdfEvaluator evaluate = [&packet](const Vec& z) {
            return ridgecraft::fobar_eval(packet, z);
        };
        config.step_size = args.step > 0 ? args.step : 0.25;
        config.tolerance = args.tolerance > 0
                               ? args.tolerance
                               : ridgecraft::detail::derive_tolerance(evaluate, mesh);
        traces = ridgecraft::run_descent(evaluate, mesh, config, threads);
    } else {
        throw CLI::ValidationError("--asdf", "expected kde|pca");
    }

    for (const auto& t : traces) finals.push_back(t.final_point);
    ridgecraft::write_cloud_csv(finals, args.out);
    const std::string trace_path = args.out + ".trace.csv";
    write_trace_csv(traces, fit.ambient_dim, trace_path);
    clock.write("descend",
                {{"asdf", args.asdf},
                 {"fit", args.fit_path},
                 {"mesh", args.mesh_path},
                 {"bandwidth", args.bandwidth},
                 {"step", config.step_size},
                 {"tolerance", config.tolerance},
                 {"max_iters", args.max_iters},
                 {"d", args.intrinsic_dim},
                 {"threads", threads}},
                args.seed, {args.out, trace_path}, args.out + ".manifest.json");
    return 0;
}

// ---------------------------------------------------------------- bench

struct BenchArgs {
    std::string config_path;
    std::string profile = "ci";
    std::string out_dir = ".";
    std::uint64_t seed = 1;
    bool seed_set = false;
    int trials = 0;
    std::size_t n_fit = 0, n_mesh = 0, n_reference = 0;
    double noise_sd = -1.0;
    int threads = 0;
};

int run_bench(const BenchArgs& args) {
    ManifestClock clock;
    nlohmann::json file_config = nlohmann::json::object();
    if (!args.config_path.empty()) {
        std::ifstream in(args.config_path);
        if (!in) throw std::runtime_error("cannot open config: " + args.config_path);
        file_config = nlohmann::json::parse(in);  // reports line on failure
    }

    ridgecraft::ExperimentConfig base;
    base.trials = args.profile == "full" ? 100 : 20;
    base.threads = args.threads > 0 ? args.threads : default_threads();
    // File config first, explicit flags win.
    if (file_config.contains("trials")) base.trials = file_config["trials"];
    if (file_config.contains("n_fit")) base.n_fit = file_config["n_fit"];
    if (file_config.contains("n_mesh")) base.n_mesh = file_config["n_mesh"];
    if (file_config.contains("n_reference")) base.n_reference = file_config["n_reference"];
    if (file_config.contains("noise_sd")) base.noise_sd = file_config["noise_sd"];
    if (file_config.contains("seed")) base.seed = file_config["seed"];
    if (args.trials > 0) base.trials = args.trials;
    if (args.n_fit > 0) base.n_fit = args.n_fit;
    if (args.n_mesh > 0) base.n_mesh = args.n_mesh;
    if (args.n_reference > 0) base.n_reference = args.n_reference;
    if (args.noise_sd >= 0) base.noise_sd = args.noise_sd;
    if (args.seed_set) base.seed = args.seed;

    std::filesystem::create_directories(args.out_dir);
    const std::vector<std::pair<std::string, ManifoldSpec>> manifolds = {
        {"circle", ManifoldSpec(ManifoldKind::Circle2D, 1.0)},
        {"curve", ManifoldSpec(ManifoldKind::ClosedCurve3D, 0.9)},
        {"sphere", ManifoldSpec(ManifoldKind::Sphere3D, 1.0)},
    };

    std::vector<std::string> outputs;
    std::printf("%-8s %12s %12s %10s\n", "manifold", "kde_rms", "pca_rms", "conv");
    for (const auto& [name, spec] : manifolds) {
        double row[2] = {0, 0}, conv[2] = {0, 0};
        for (AsdfKind kind : {AsdfKind::Kde, AsdfKind::Pca}) {
            ridgecraft::ExperimentConfig config = base;
            config.spec = spec;
            config.asdf_kind = kind;
            ridgecraft::ExperimentReport report = ridgecraft::run_experiment(config);
            const std::string stem =
                args.out_dir + "/" + name + "_" + ridgecraft::to_string(kind);
            write_json_atomic(ridgecraft::report_to_json(report), stem + ".json");
            ridgecraft::write_rms_csv(report, stem + ".rms.csv");
            outputs.push_back(stem + ".json");
            outputs.push_back(stem + ".rms.csv");
            row[kind == AsdfKind::Pca] = report.mean_rms;
            conv[kind == AsdfKind::Pca] = report.convergence_fraction;
        }
        std::printf("%-8s %12.6g %12.6g %5.3f/%5.3f\n", name.c_str(), row[0], row[1],
                    conv[0], conv[1]);
    }

    clock.write("bench",
                {{"profile", args.profile},
                 {"trials", base.trials},
                 {"n_fit", base.n_fit},
                 {"n_mesh", base.n_mesh},
                 {"n_reference", base.n_reference},
                 {"noise_sd", base.noise_sd},
                 {"threads", base.threads}},
                base.seed, outputs, args.out_dir + "/manifest.json");
    return 0;
}

// ------------------------------------------------------- validate-packet

struct ValidateArgs {
    std::string fit_path;
    double tau_bar = 0.1;
    int intrinsic_dim = 1;
    double reach = 1.0;
    double volume = 0.0;
};

int run_validate(const ValidateArgs& args) {
    ManifestClock clock;
    PointCloud fit = ridgecraft::read_cloud_csv(args.fit_path);
    if (args.intrinsic_dim < 1 || args.intrinsic_dim >= fit.ambient_dim)
        throw CLI::ValidationError("--d", "need 1 <= d < ambient dimension");

    ridgecraft::CylinderPacket packet =
        ridgecraft::build_packet(fit, args.tau_bar, args.intrinsic_dim);
    ridgecraft::PacketValidationReport report =
        ridgecraft::validate_packet(packet, args.reach, args.volume);

    auto print_row = [](const char* name, const ridgecraft::ConditionCheck& check) {
        std::printf("%-20s %-5s %14.6g\n", name, check.pass ? "pass" : "FAIL",
                    check.margin);
    };
    std::printf("%-20s %-5s %14s\n", "condition", "ok", "margin");
    print_row("count_bound", report.count_bound);
    print_row("center_separation", report.center_separation);
    print_row("net_coverage", report.net_coverage);
    print_row("rotation_bound", report.rotation_bound);
    print_row("translation_bound", report.translation_bound);
    std::printf("cylinders: %zu\n", packet.cylinders().size());

    clock.write("validate-packet",
                {{"fit", args.fit_path},
                 {"tau_bar", args.tau_bar},
                 {"d", args.intrinsic_dim},
                 {"reach", args.reach},
                 {"volume", args.volume}},
                0, {}, args.fit_path + ".validate.manifest.json");
    return report.all_pass() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"manifold estimation via asdf ridges"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    SampleArgs sample;
    auto* cmd_sample = app.add_subcommand("sample", "sample a synthetic manifold");
    cmd_sample->add_option("--manifold", sample.manifold, "circle|curve|sphere");
    cmd_sample->add_option("--scale", sample.scale)->check(CLI::Range(1e-9, 1.0));
    cmd_sample->add_option("--count", sample.count)->check(CLI::PositiveNumber);
    cmd_sample->add_option("--seed", sample.seed);
    cmd_sample->add_option("--noise-sd", sample.noise_sd)->check(CLI::NonNegativeNumber);
    cmd_sample->add_option("--out", sample.out)->required();

    DescendArgs descend;
    auto* cmd_descend = app.add_subcommand("descend", "run SCGD over a mesh");
    cmd_descend->add_option("--asdf", descend.asdf, "kde|pca");
    cmd_descend->add_option("--fit", descend.fit_path)->required();
    cmd_descend->add_option("--mesh", descend.mesh_path)->required();
    cmd_descend->add_option("--bandwidth", descend.bandwidth)->check(CLI::PositiveNumber);
    cmd_descend->add_option("--frame-scale", descend.frame_scale,
                            "PCA frame-estimation ball scale (pca asdf only)")
        ->check(CLI::Range(1.0, 100.0));
    cmd_descend->add_option("--step", descend.step);
    cmd_descend->add_option("--tolerance", descend.tolerance);
    cmd_descend->add_option("--max-iters", descend.max_iters)->check(CLI::PositiveNumber);
    cmd_descend->add_option("--d", descend.intrinsic_dim)->check(CLI::PositiveNumber);
    cmd_descend->add_option("--reach", descend.reach);
    cmd_descend->add_option("--volume", descend.volume);
    cmd_descend->add_option("--threads", descend.threads);
    cmd_descend->add_option("--seed", descend.seed);
    cmd_descend->add_option("--out", descend.out)->required();

    BenchArgs bench;
    auto* cmd_bench = app.add_subcommand("bench", "benchmark table over all cells");
    cmd_bench->add_option("--config", bench.config_path, "JSON config file");
    cmd_bench->add_option("--profile", bench.profile)
        ->check(CLI::IsMember({"ci", "full"}));
    cmd_bench->add_option("--out-dir", bench.out_dir);
    cmd_bench->add_option("--seed", bench.seed)->each([&](const std::string&) {
        bench.seed_set = true;
    });
    cmd_bench->add_option("--trials", bench.trials);
    cmd_bench->add_option("--n-fit", bench.n_fit);
    cmd_bench->add_option("--n-mesh", bench.n_mesh);
    cmd_bench->add_option("--n-reference", bench.n_reference);
    cmd_bench->add_option("--noise-sd", bench.noise_sd);
    cmd_bench->add_option("--threads", bench.threads);

    ValidateArgs validate;
    auto* cmd_validate =
        app.add_subcommand("validate-packet", "check the packet conditions");
    cmd_validate->add_option("--fit", validate.fit_path)->required();
    cmd_validate->add_option("--tau-bar", validate.tau_bar)->check(CLI::PositiveNumber);
    cmd_validate->add_option("--d", validate.intrinsic_dim)->check(CLI::PositiveNumber);
    cmd_validate->add_option("--reach", validate.reach)->check(CLI::PositiveNumber);
    cmd_validate->add_option("--volume", validate.volume)
        ->check(CLI::PositiveNumber)
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 64;
    }

    try {
        if (cmd_sample->parsed()) return run_sample(sample);
        if (cmd_descend->parsed()) return run_descend(descend);
        if (cmd_bench->parsed()) return run_bench(bench);
        if (cmd_validate->parsed()) return run_validate(validate);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 64;
    } catch (const ridgecraft::NetInfeasibleError& e) {
        std::cerr << "validation failure: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 64;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 64;
}
