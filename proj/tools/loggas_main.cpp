// loggas command-line driver: equilibrium | sample | localstats | validate | report
//
// The pipeline is file-mediated: `equilibrium` writes rho_c.csv + equilibrium.json,
// `sample` writes batch.bin, `localstats` consumes both and writes the Poisson
// reports. `validate` runs the built-in acceptance suite with pinned seeds.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "loggas/loggas.hpp"

namespace {

struct GlobalFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> out_dir;
    bool strict = false;
    bool quick = false;
};

loggas::ExperimentConfig load_config(const GlobalFlags& g) {
    loggas::ExperimentConfig cfg;
    if (!g.config_path.empty()) {
        const auto path = std::filesystem::path(g.config_path);
        cfg = loggas::experiment_from_json(loggas::read_json_file(path), path.parent_path());
    }
    if (g.seed) cfg.seed = *g.seed;
    if (g.threads) cfg.threads = *g.threads;
    if (g.out_dir) cfg.out_dir = *g.out_dir;
    cfg.validate();
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"beta-ensemble laboratory: equilibrium measures, finite-N sampling, "
                 "and local Poisson statistics in the high-temperature regime"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand name
    app.set_version_flag("--version", std::string(loggas::kVersion));

    GlobalFlags g;
    app.add_option("--config", g.config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "override the config seed");
    app.add_option("--threads", g.threads, "worker threads (default: all cores)");
    app.add_option("--out", g.out_dir, "output directory");
    app.add_flag("--strict", g.strict, "escalate sampler warnings to a nonzero exit");
    app.add_flag("--quick", g.quick, "validate: run the fast non-sampling subset");

    auto* equilibrium = app.add_subcommand("equilibrium", "solve the fixed-point equation for rho_c");
    auto* sample = app.add_subcommand("sample", "draw finite-N configurations into a batch file");
    std::string oracle;
    sample->add_option("--oracle", oracle, "also draw an exact oracle batch (tridiagonal) and compare");
    auto* localstats = app.add_subcommand("localstats", "Poisson statistics of the rescaled points");
    std::string batch_path, eq_path;
    localstats->add_option("--batch", batch_path, "batch container from `sample`")->required();
    localstats->add_option("--equilibrium", eq_path, "equilibrium.json from `equilibrium`")->required();
    auto* validate = app.add_subcommand("validate", "run the built-in acceptance suite");
    auto* report = app.add_subcommand("report", "merge JSON outputs in --out into summary.csv");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) {
            loggas::ValidateOptions opt;
            opt.quick = g.quick;
            if (g.threads) opt.threads = *g.threads;
            if (g.out_dir) opt.out_dir = *g.out_dir;
            return loggas::cmd_validate(opt);
        }
        if (report->parsed()) {
            return loggas::cmd_report(g.out_dir.value_or("out"));
        }
        const auto cfg = load_config(g);
        if (equilibrium->parsed()) return loggas::cmd_equilibrium(cfg);
        if (sample->parsed()) return loggas::cmd_sample(cfg, g.strict, oracle);
        if (localstats->parsed()) return loggas::cmd_localstats(cfg, batch_path, eq_path);
    } catch (const loggas::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return loggas::exit_code::config;
    } catch (const loggas::error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return loggas::exit_code::failure;
    }
    return loggas::exit_code::ok;
}
