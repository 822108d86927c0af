#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "loggas/io.hpp"
#include "loggas/version.hpp"

namespace loggas {

struct config_error : error {
    using error::error;
};

struct GridOverride {
    std::optional<double> lo, hi;
    std::optional<int> n;
};

struct SamplerSettings {
    int n_particles = 500;
    int samples = 2000;
    std::string method = "tridiagonal"; // or "mcmc"
    int replicas = 1;                   // independent chains (mcmc only)
    bool emit_csv = false;
    McmcSettings mcmc;
};

struct LocalStatsSettings {
    std::vector<double> energies = {0.0, 1.0};
    double half_width = 5.0;
    double significance = 0.01;
    int k1_bins = 10;
    int k2_bins = 5;
};

/// One experiment: a potential, the interaction strength c, and the knobs of
/// the three pipeline stages. beta for the finite-N ensemble is always 2c/N.
struct ExperimentConfig {
    PotentialSpec potential;
    double c = 1.0;
    GridOverride grid;
    SolverConfig solver;
    SamplerSettings sampler;
    LocalStatsSettings localstats;
    std::uint64_t seed = 12345;
    int threads = 0; // 0 = hardware concurrency
    std::filesystem::path out_dir = "out";

    double beta() const { return 2.0 * c / sampler.n_particles; }

    void validate() const {
        if (!(c >= 0.0)) throw config_error("config: c must be >= 0");
        if (sampler.n_particles < 1) throw config_error("config: n_particles must be >= 1");
        if (sampler.samples < 1) throw config_error("config: samples must be >= 1");
        if (sampler.method != "mcmc" && sampler.method != "tridiagonal")
            throw config_error("config: sampler method must be 'mcmc' or 'tridiagonal'");
        if (sampler.replicas < 1) throw config_error("config: replicas must be >= 1");
        if (sampler.samples % sampler.replicas != 0)
            throw config_error("config: samples must divide evenly across replicas");
        if (!(localstats.half_width > 0.0)) throw config_error("config: half_width must be positive");
        if (!(localstats.significance > 0.0 && localstats.significance < 1.0))
            throw config_error("config: significance must lie in (0,1)");
        if (localstats.energies.empty()) throw config_error("config: need at least one energy");
        if (grid.n && *grid.n < 3) throw config_error("config: grid n must be >= 3");
    }
};

inline json experiment_to_json(const ExperimentConfig& cfg) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["c"] = cfg.c;
    j["potential"] = potential_to_json(cfg.potential);
    json grid = json::object();
    if (cfg.grid.lo) grid["lo"] = *cfg.grid.lo;
    if (cfg.grid.hi) grid["hi"] = *cfg.grid.hi;
    if (cfg.grid.n) grid["n"] = *cfg.grid.n;
    if (!grid.empty()) j["grid"] = grid;
    j["solver"] = {{"tol", cfg.solver.tol}, {"max_iter", cfg.solver.max_iter}, {"damping", cfg.solver.damping}};
    j["sampler"] = {{"n_particles", cfg.sampler.n_particles},
                    {"samples", cfg.sampler.samples},
                    {"method", cfg.sampler.method},
                    {"replicas", cfg.sampler.replicas},
                    {"emit_csv", cfg.sampler.emit_csv},
                    {"step_size", cfg.sampler.mcmc.step_size},
                    {"sweeps_burnin", cfg.sampler.mcmc.sweeps_burnin},
                    {"sweeps_between", cfg.sampler.mcmc.sweeps_between},
                    {"target_acceptance", cfg.sampler.mcmc.target_acceptance},
                    {"adapt", cfg.sampler.mcmc.adapt}};
    j["localstats"] = {{"energies", cfg.localstats.energies},
                       {"half_width", cfg.localstats.half_width},
                       {"significance", cfg.localstats.significance},
                       {"k1_bins", cfg.localstats.k1_bins},
                       {"k2_bins", cfg.localstats.k2_bins}};
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["out_dir"] = cfg.out_dir.string();
    return j;
}

/// Parses a config document; unknown schema versions and invalid values are
/// config errors (CLI exit 2). `base_dir` resolves relative table paths.
inline ExperimentConfig experiment_from_json(const json& j,
                                             const std::filesystem::path& base_dir = ".") {
    ExperimentConfig cfg;
    try {
        if (j.contains("schema_version") && j.at("schema_version").get<int>() != kSchemaVersion)
            throw config_error("config: unsupported schema_version");
        if (j.contains("c")) cfg.c = j.at("c").get<double>();
        if (j.contains("potential")) {
            const auto& p = j.at("potential");
            if (p.contains("table_path")) {
                auto path = std::filesystem::path(p.at("table_path").get<std::string>());
                if (path.is_relative()) path = base_dir / path;
                cfg.potential = load_tabulated_csv(path, p.value("shift", 0.0));
            } else {
                cfg.potential = potential_from_json(p);
            }
        }
        if (j.contains("grid")) {
            const auto& g = j.at("grid");
            if (g.contains("lo")) cfg.grid.lo = g.at("lo").get<double>();
            if (g.contains("hi")) cfg.grid.hi = g.at("hi").get<double>();
            if (g.contains("n")) cfg.grid.n = g.at("n").get<int>();
        }
        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            cfg.solver.tol = s.value("tol", cfg.solver.tol);
            cfg.solver.max_iter = s.value("max_iter", cfg.solver.max_iter);
            cfg.solver.damping = s.value("damping", cfg.solver.damping);
        }
        if (j.contains("sampler")) {
            const auto& s = j.at("sampler");
            cfg.sampler.n_particles = s.value("n_particles", cfg.sampler.n_particles);
            cfg.sampler.samples = s.value("samples", cfg.sampler.samples);
            cfg.sampler.method = s.value("method", cfg.sampler.method);
            cfg.sampler.replicas = s.value("replicas", cfg.sampler.replicas);
            cfg.sampler.emit_csv = s.value("emit_csv", cfg.sampler.emit_csv);
            cfg.sampler.mcmc.step_size = s.value("step_size", cfg.sampler.mcmc.step_size);
            cfg.sampler.mcmc.sweeps_burnin = s.value("sweeps_burnin", cfg.sampler.mcmc.sweeps_burnin);
            cfg.sampler.mcmc.sweeps_between = s.value("sweeps_between", cfg.sampler.mcmc.sweeps_between);
            cfg.sampler.mcmc.target_acceptance = s.value("target_acceptance", cfg.sampler.mcmc.target_acceptance);
            cfg.sampler.mcmc.adapt = s.value("adapt", cfg.sampler.mcmc.adapt);
        }
        if (j.contains("localstats")) {
            const auto& l = j.at("localstats");
            if (l.contains("energies")) cfg.localstats.energies = l.at("energies").get<std::vector<double>>();
            cfg.localstats.half_width = l.value("half_width", cfg.localstats.half_width);
            cfg.localstats.significance = l.value("significance", cfg.localstats.significance);
            cfg.localstats.k1_bins = l.value("k1_bins", cfg.localstats.k1_bins);
            cfg.localstats.k2_bins = l.value("k2_bins", cfg.localstats.k2_bins);
        }
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
        if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
    } catch (const json::exception& e) {
        throw config_error(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

/// FNV-1a over the canonical serialization; nlohmann objects iterate in key
/// order, so the hash does not depend on the key order of the input file.
inline std::string config_hash(const ExperimentConfig& cfg) {
    const std::string s = experiment_to_json(cfg).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Run manifest: per-stage output files and pass/fail, appended stage by stage.
struct RunManifest {
    std::filesystem::path path;
    json doc;

    static RunManifest open(const std::filesystem::path& out_dir, const std::string& cfg_hash) {
        RunManifest m;
        m.path = out_dir / "manifest.json";
        if (std::filesystem::exists(m.path)) {
            try {
                m.doc = read_json_file(m.path);
            } catch (const error&) {
                m.doc = json::object(); // unreadable manifest: start over
            }
        }
        if (!m.doc.is_object()) m.doc = json::object();
        m.doc["schema_version"] = kSchemaVersion;
        m.doc["artifact_version"] = kVersion;
        m.doc["config_hash"] = cfg_hash;
        if (!m.doc.contains("stages")) m.doc["stages"] = json::array();
        return m;
    }

    void record(const std::string& stage, const std::vector<std::filesystem::path>& outputs,
                bool pass, const json& extra = json::object()) {
        json s;
        s["name"] = stage;
        s["timestamp"] = utc_timestamp();
        s["pass"] = pass;
        json files = json::array();
        for (const auto& p : outputs) files.push_back(p.filename().string());
        s["outputs"] = files;
        if (!extra.empty()) s["extra"] = extra;
        // replace a previous record of the same stage
        auto& stages = doc["stages"];
        for (auto& st : stages)
            if (st.value("name", "") == stage) {
                st = s;
                write_json_file(path, doc);
                return;
            }
        stages.push_back(s);
        write_json_file(path, doc);
    }
};

} // namespace loggas
