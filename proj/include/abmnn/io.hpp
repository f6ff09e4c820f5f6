#pragma once

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"

#include "abmnn/core.hpp"

namespace abmnn {

// Stable 64-bit FNV-1a over the canonical (sorted-key) JSON dump.
inline std::string config_hash(const nlohmann::json& config) {
    const std::string dump = config.dump();
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + salt * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw IoError("invalid json in " + path + ": " + e.what());
    }
    return j;
}

inline void write_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

inline std::string iso_timestamp() {
    std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return stamp;
}

// Every run writes its manifest before any result file; it starts in the
// failed state and flips to ok only when the run completes, so a crash
// leaves status=failed behind.
struct RunManifest {
    std::string subcommand;
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string started_at;
    std::string finished_at;
    std::string hash;
    std::string status = "failed";
    double runtime_sec = 0.0;

    std::string path() const { return out_dir + "/manifest.json"; }

    void write() const {
        nlohmann::json j{{"subcommand", subcommand}, {"config_path", config_path},
                         {"seed", seed},             {"out_dir", out_dir},
                         {"started_at", started_at}, {"finished_at", finished_at},
                         {"config_hash", hash},      {"status", status},
                         {"runtime_sec", runtime_sec}};
        write_json(j, path());
    }
};

inline RunManifest open_manifest(const std::string& subcommand, const std::string& config_path,
                                 std::uint64_t seed, const std::string& out_dir,
                                 const nlohmann::json& config) {
    std::filesystem::create_directories(out_dir);
    RunManifest m;
    m.subcommand = subcommand;
    m.config_path = config_path;
    m.seed = seed;
    m.out_dir = out_dir;
    m.started_at = iso_timestamp();
    m.hash = config_hash(config);
    m.write();
    return m;
}

inline void close_manifest(RunManifest& m, double runtime_sec) {
    m.status = "ok";
    m.finished_at = iso_timestamp();
    m.runtime_sec = runtime_sec;
    m.write();
}

}  // namespace abmnn
