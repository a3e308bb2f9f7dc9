#include "ridgecraft/csv.hpp"
#include "ridgecraft/manifold.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* p = std::getenv("RIDGECRAFT_CLI_PATH");
    REQUIRE(p != nullptr);
    return p;
}

/// Runs the binary with `args`, capturing stdout+stderr into `log`; returns
/// the process exit code.
int run_cli(const std::string& args, const std::string& log) {
    const std::string cmd = cli_path() + " " + args + " >" + log + " 2>&1";
    int raw = std::system(cmd.c_str());
    REQUIRE(raw != -1);
    REQUIRE(WIFEXITED(raw));
    return WEXITSTATUS(raw);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("ridgecraft_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("sample writes the cloud and its manifest") {
    TempDir dir;
    const std::string out = dir.file("circle.csv");
    const std::string log = dir.file("log.txt");
    int code = run_cli("sample --manifold circle --count 1000 --seed 3 --out " + out, log);
    REQUIRE(code == 0);

    ridgecraft::PointCloud cloud = ridgecraft::read_cloud_csv(out);
    CHECK(cloud.size() == 1000);
    CHECK(cloud.ambient_dim == 2);
    for (const ridgecraft::Vec& p : cloud.points)
        CHECK(std::abs(p.norm() - 1.0) < 1e-12);

    nlohmann::json manifest = nlohmann::json::parse(slurp(out + ".manifest.json"));
    CHECK(manifest["command"] == "sample");
    CHECK(manifest["seed"].get<std::uint64_t>() == 3);
    CHECK(manifest["config"]["count"].get<std::size_t>() == 1000);
    CHECK(manifest["outputs"][0].get<std::string>() == out);
    CHECK(manifest["duration_seconds"].get<double>() >= 0.0);
}

TEST_CASE("sample is deterministic in the seed") {
    TempDir dir;
    const std::string a = dir.file("a.csv"), b = dir.file("b.csv"),
                      c = dir.file("c.csv"), log = dir.file("log.txt");
    const std::string base = "sample --manifold sphere --count 50 --noise-sd 0.05 ";
    REQUIRE(run_cli(base + "--seed 9 --out " + a, log) == 0);
    REQUIRE(run_cli(base + "--seed 9 --out " + b, log) == 0);
    REQUIRE(run_cli(base + "--seed 10 --out " + c, log) == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a) != slurp(c));
}

TEST_CASE("usage errors exit 64") {
    TempDir dir;
    const std::string log = dir.file("log.txt");
    CHECK(run_cli("sample --count 0 --out " + dir.file("x.csv"), log) == 64);
    CHECK(run_cli("sample --manifold torus --out " + dir.file("x.csv"), log) == 64);
    CHECK(run_cli("descend --mesh missing.csv --out " + dir.file("x.csv"), log) == 64);
    CHECK(run_cli("bench --profile nightly", log) == 64);
    CHECK(run_cli("validate-packet --fit x.csv", log) == 64);  // missing --volume
    CHECK(run_cli("", log) == 64);                             // subcommand required
}

TEST_CASE("descend recovers the circle from noisy mesh points") {
    TempDir dir;
    const std::string fit = dir.file("fit.csv"), mesh = dir.file("mesh.csv"),
                      out = dir.file("ridge.csv"), log = dir.file("log.txt");
    REQUIRE(run_cli("sample --manifold circle --count 800 --seed 21 --out " + fit, log) == 0);
    REQUIRE(run_cli("sample --manifold circle --count 60 --seed 22 --noise-sd 0.04 --out " +
                        mesh, log) == 0);
    REQUIRE(run_cli("descend --asdf kde --bandwidth 0.05 --fit " + fit + " --mesh " +
                        mesh + " --threads 1 --out " + out, log) == 0);

    ridgecraft::PointCloud finals = ridgecraft::read_cloud_csv(out);
    REQUIRE(finals.size() == 60);

    // trace file: header shape, then count converged rows (column 4)
    std::ifstream trace(out + ".trace.csv");
    std::string header;
    std::getline(trace, header);
    CHECK(header == "x0,x1,iterations,converged,residual,status");
    int converged = 0, rows = 0;
    for (std::string line; std::getline(trace, line); ++rows) {
        std::stringstream ss(line);
        std::string field;
        for (int j = 0; j < 4; ++j) std::getline(ss, field, ',');
        if (field == "1") ++converged;
    }
    CHECK(rows == 60);
    CHECK(converged >= 57);  // >= 95%

    ridgecraft::ManifoldSpec spec(ridgecraft::ManifoldKind::Circle2D, 1.0);
    double worst = 0.0;
    for (const ridgecraft::Vec& p : finals.points)
        worst = std::max(worst, ridgecraft::distance_to_manifold(spec, p));
    CHECK(worst < 0.02);
}

TEST_CASE("descend with the pca asdf") {
    TempDir dir;
    const std::string fit = dir.file("fit.csv"), mesh = dir.file("mesh.csv"),
                      out = dir.file("ridge.csv"), log = dir.file("log.txt");
    REQUIRE(run_cli("sample --manifold circle --count 800 --seed 31 --out " + fit, log) == 0);
    REQUIRE(run_cli("sample --manifold circle --count 30 --seed 32 --noise-sd 0.02 --out " +
                        mesh, log) == 0);
    REQUIRE(run_cli("descend --asdf pca --bandwidth 0.08 --fit " + fit + " --mesh " +
                        mesh + " --threads 1 --out " + out, log) == 0);
    ridgecraft::PointCloud finals = ridgecraft::read_cloud_csv(out);
    CHECK(finals.size() == 30);
}

TEST_CASE("validate-packet exit codes") {
    TempDir dir;
    const std::string fit = dir.file("fit.csv"), log = dir.file("log.txt");
    REQUIRE(run_cli("sample --manifold circle --count 1500 --seed 41 --out " + fit, log) == 0);

    // dense cloud, generous tube: every condition passes
    int ok = run_cli("validate-packet --fit " + fit +
                         " --tau-bar 0.05 --d 1 --reach 1 --volume 6.2831853071795862", log);
    INFO(slurp(log));
    CHECK(ok == 0);

    // far too small a tube for this density: infeasible
    TempDir dir2;
    const std::string sparse = dir2.file("sparse.csv"), log2 = dir2.file("log.txt");
    REQUIRE(run_cli("sample --manifold circle --count 20 --seed 42 --out " + sparse, log2) == 0);
    CHECK(run_cli("validate-packet --fit " + sparse +
                      " --tau-bar 0.01 --d 1 --reach 1 --volume 6.28", log2) == 2);

    // bad intrinsic dimension
    CHECK(run_cli("validate-packet --fit " + fit +
                      " --tau-bar 0.05 --d 5 --reach 1 --volume 6.28", log) == 64);
}

TEST_CASE("bench is deterministic for a fixed seed") {
    TempDir dir;
    const std::string log = dir.file("log.txt");
    const std::string flags =
        " --trials 1 --n-fit 500 --n-mesh 15 --n-reference 800 --noise-sd 0.03"
        " --threads 1 --seed 5 --out-dir ";
    REQUIRE(run_cli("bench" + flags + dir.file("run1"), log) == 0);
    REQUIRE(run_cli("bench" + flags + dir.file("run2"), log) == 0);

    const std::vector<std::string> stems = {"circle_kde", "circle_pca", "curve_kde",
                                            "curve_pca", "sphere_kde", "sphere_pca"};
    for (const std::string& stem : stems) {
        const std::string a = slurp(dir.file("run1/" + stem + ".json"));
        const std::string b = slurp(dir.file("run2/" + stem + ".json"));
        REQUIRE(!a.empty());
        CHECK(a == b);
        CHECK(slurp(dir.file("run1/" + stem + ".rms.csv")) ==
              slurp(dir.file("run2/" + stem + ".rms.csv")));
    }
    nlohmann::json manifest =
        nlohmann::json::parse(slurp(dir.file("run1/manifest.json")));
    CHECK(manifest["command"] == "bench");
    CHECK(manifest["outputs"].size() == 12);

    // config file is honored, explicit flags still win
    const std::string cfg = dir.file("cfg.json");
    {
        std::ofstream out(cfg);
        out << R"({"trials": 1, "n_fit": 500, "n_mesh": 15, "n_reference": 800,)"
            << R"( "noise_sd": 0.03, "seed": 5})";
    }
    REQUIRE(run_cli("bench --config " + cfg + " --threads 1 --out-dir " +
                        dir.file("run3"), log) == 0);
    CHECK(slurp(dir.file("run3/circle_kde.json")) ==
          slurp(dir.file("run1/circle_kde.json")));
}
