// End-to-end checks of the CLI binary: exit codes, manifests, and the
// determinism contract on result files. The binary path arrives via the
// ABMNN_BIN environment variable (set by CTest).

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

std::string binary_path() {
    const char* p = std::getenv("ABMNN_BIN");
    REQUIRE(p != nullptr);
    return p;
}

int run_cli(const std::string& args) {
    const std::string cmd = binary_path() + " " + args + " > /dev/null 2> /tmp/abmnn_cli_err.txt";
    return std::system(cmd.c_str());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_config(const fs::path& p, const std::string& body) {
    std::ofstream out(p);
    out << body;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::path("/tmp") / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("unknown subcommand fails with nonzero exit") {
    REQUIRE(run_cli("frobnicate") != 0);
}

TEST_CASE("invalid config produces a machine-readable error and a failed manifest") {
    TempDir dir("abmnn_cli_invalid");
    write_config(dir.path / "bad.json", "{\"kind\": \"nope\"}");
    const int rc = run_cli("export-traj --config " + (dir.path / "bad.json").string() + " --out " +
                           (dir.path / "out").string());
    REQUIRE(rc != 0);
    auto err = nlohmann::json::parse(slurp("/tmp/abmnn_cli_err.txt"));
    REQUIRE(err.contains("error"));
    auto manifest = nlohmann::json::parse(slurp(dir.path / "out" / "manifest.json"));
    REQUIRE(manifest.at("status") == "failed");
}

TEST_CASE("export-traj writes manifest before results and flips it to ok") {
    TempDir dir("abmnn_cli_export");
    write_config(dir.path / "cfg.json", R"({"kind":"sir","n":30,"t_max":2.0,"init_infected":5})");
    const int rc = run_cli("export-traj --config " + (dir.path / "cfg.json").string() + " --seed 3 --out " +
                           (dir.path / "out").string());
    REQUIRE(rc == 0);
    auto manifest = nlohmann::json::parse(slurp(dir.path / "out" / "manifest.json"));
    REQUIRE(manifest.at("status") == "ok");
    REQUIRE(manifest.at("subcommand") == "export-traj");
    auto result = nlohmann::json::parse(slurp(dir.path / "out" / "result.json"));
    REQUIRE(result.at("manifest") == "manifest.json");
    REQUIRE(fs::exists(dir.path / "out" / "trajectory.csv"));
    REQUIRE(fs::exists(dir.path / "out" / "aggregate.csv"));
}

TEST_CASE("identical seed and config give bit-identical result files") {
    TempDir dir("abmnn_cli_determinism");
    write_config(dir.path / "cfg.json",
                 R"({"n":25,"init_infected":5,"t_max":3.0,"epochs":8,"hidden":8,"hidden_layers":2})");
    for (const char* run : {"a", "b"}) {
        const int rc = run_cli("sir-train --config " + (dir.path / "cfg.json").string() + " --seed 7 --out " +
                               (dir.path / run).string());
        REQUIRE(rc == 0);
    }
    for (const char* file : {"result.json", "truth_aggregate.csv", "pred_aggregate.csv", "params.json",
                             "graph.json"}) {
        INFO(file);
        REQUIRE(slurp(dir.path / "a" / file) == slurp(dir.path / "b" / file));
    }
    // different seed changes the results
    REQUIRE(run_cli("sir-train --config " + (dir.path / "cfg.json").string() + " --seed 8 --out " +
                    (dir.path / "c").string()) == 0);
    REQUIRE(slurp(dir.path / "a" / "result.json") != slurp(dir.path / "c" / "result.json"));
}

TEST_CASE("sir-eval-oos emits intervention markers in trajectory csv") {
    TempDir dir("abmnn_cli_oos");
    // tiny training run to produce a params snapshot
    write_config(dir.path / "train.json",
                 R"({"n":25,"init_infected":5,"t_max":2.0,"epochs":4,"hidden":8,"hidden_layers":2})");
    REQUIRE(run_cli("sir-train --config " + (dir.path / "train.json").string() + " --seed 5 --out " +
                    (dir.path / "train").string()) == 0);
    write_config(dir.path / "eval.json",
                 "{\"model\":\"" + (dir.path / "train" / "params.json").string() +
                     R"(","n":40,"i0_frac":0.1,"t_max":4.0,"mask":{"t_start":1.5,"t_end":3.0,"fraction":0.9}})");
    REQUIRE(run_cli("sir-eval-oos --config " + (dir.path / "eval.json").string() + " --seed 5 --out " +
                    (dir.path / "eval").string()) == 0);
    const std::string agg = slurp(dir.path / "eval" / "pred_aggregate.csv");
    REQUIRE(agg.find("mask_active") != std::string::npos);
    REQUIRE(agg.find(",1\n") != std::string::npos);  // active marker inside the window
    auto result = nlohmann::json::parse(slurp(dir.path / "eval" / "result.json"));
    REQUIRE(result.at("mask").at("fraction") == 0.9);
}

TEST_CASE("macro-ingest refuses to fetch when offline") {
    TempDir dir("abmnn_cli_offline");
    const int rc = run_cli("macro-ingest --fetch --offline --out " + (dir.path / "out").string());
    REQUIRE(rc != 0);
    auto err = nlohmann::json::parse(slurp("/tmp/abmnn_cli_err.txt"));
    const std::string msg = err.at("error");
    REQUIRE(msg.find("network access is disabled") != std::string::npos);
}

TEST_CASE("macro-ingest processes the bundled snapshot") {
    TempDir dir("abmnn_cli_ingest");
    const char* snapshot_env = std::getenv("ABMNN_SNAPSHOT");
    REQUIRE(snapshot_env != nullptr);
    write_config(dir.path / "cfg.json", std::string("{\"snapshot\":\"") + snapshot_env + "\"}");
    REQUIRE(run_cli("macro-ingest --config " + (dir.path / "cfg.json").string() + " --out " +
                    (dir.path / "out").string()) == 0);
    auto result = nlohmann::json::parse(slurp(dir.path / "out" / "result.json"));
    REQUIRE(result.at("countries").size() == 10);
    REQUIRE(fs::exists(dir.path / "out" / "standardized.csv"));
    REQUIRE(fs::exists(dir.path / "out" / "imputed.csv"));
}
