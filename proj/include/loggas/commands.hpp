#pragma once

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "loggas/experiment.hpp"
#include "loggas/localstats.hpp"

namespace loggas {

namespace exit_code {
constexpr int ok = 0;
constexpr int failure = 1;          // solver / test failure
constexpr int config = 2;           // validation or file-mismatch errors
constexpr int strict_warning = 3;   // acceptance-rate warning under --strict
} // namespace exit_code

inline int resolve_threads(const ExperimentConfig& cfg) {
    return cfg.threads > 0 ? cfg.threads : default_threads();
}

/// Working grid for the solve: explicit overrides, otherwise the truncation
/// chosen for the regime envelope kappa = 2c + 0.5 (margin over sup beta*N).
/// Guards the two domain invariants: the envelope tail outside the grid is
/// negligible, and V (after its shift) is nonnegative on the grid.
inline Grid working_grid(const ExperimentConfig& cfg, int default_n = 2001) {
    double lo, hi;
    const bool overridden = cfg.grid.lo.has_value() || cfg.grid.hi.has_value();
    if (cfg.grid.lo && cfg.grid.hi) {
        lo = *cfg.grid.lo;
        hi = *cfg.grid.hi;
    } else {
        const auto trunc = choose_truncation(cfg.potential, 2.0 * cfg.c + 0.5, 1e-10);
        lo = cfg.grid.lo.value_or(trunc.first);
        hi = cfg.grid.hi.value_or(trunc.second);
    }
    const Grid grid(lo, hi, cfg.grid.n.value_or(default_n));
    if (overridden && !truncation_adequate(cfg.potential, grid))
        throw config_error("config: grid [" + std::to_string(lo) + ", " + std::to_string(hi) +
                           "] leaves more than 1e-10 reference mass outside");
    double vmin = 0.0;
    for (int i = 0; i < grid.n; ++i) vmin = std::min(vmin, eval_potential(cfg.potential, grid.node(i)));
    if (vmin < -1e-12)
        throw config_error("config: potential dips to " + std::to_string(vmin) +
                           " on the working domain; set potential.shift to at least " +
                           std::to_string(-vmin));
    return grid;
}

inline json equilibrium_diagnostics(const EquilibriumSolution& sol, const ExperimentConfig& cfg,
                                    const std::string& csv_name) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["c"] = sol.c;
    j["z_c"] = sol.z_c;
    j["iterations"] = sol.iterations;
    j["residual"] = sol.residual;
    j["h_c"] = sol.h_c;
    j["first_moment"] = sol.rho.moment(1);
    j["second_moment"] = sol.rho.moment(2);
    j["grid"] = {{"lo", sol.rho.grid.lo}, {"hi", sol.rho.grid.hi}, {"n", sol.rho.grid.n}};
    j["potential"] = potential_to_json(cfg.potential);
    j["csv"] = csv_name;
    j["config_hash"] = config_hash(cfg);
    // Z_c is the integral over the working grid; the neglected envelope tail
    // mass is below the truncation eps by construction.
    j["z_c_convention"] = "truncated";
    return j;
}

inline void write_error_json(const std::filesystem::path& out_dir, const std::string& stage,
                             const std::string& what, const json& extra = json::object()) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["error"] = {{"stage", stage}, {"message", what}};
    if (!extra.empty()) j["error"]["detail"] = extra;
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (!ec) write_json_file(out_dir / "error.json", j);
}

/// `equilibrium` subcommand: solve for rho_c, emit CSV + diagnostics JSON.
inline int cmd_equilibrium(const ExperimentConfig& cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    auto manifest = RunManifest::open(cfg.out_dir, config_hash(cfg));
    try {
        const Grid grid = working_grid(cfg);
        const auto sol = solve_equilibrium(cfg.potential, cfg.c, grid, cfg.solver);
        const auto csv = cfg.out_dir / "rho_c.csv";
        const auto jsn = cfg.out_dir / "equilibrium.json";
        write_equilibrium_csv(csv, sol);
        write_json_file(jsn, equilibrium_diagnostics(sol, cfg, "rho_c.csv"));
        manifest.record("equilibrium", {csv, jsn}, true,
                        {{"iterations", sol.iterations}, {"residual", sol.residual}});
        std::cout << "equilibrium: c=" << cfg.c << " iterations=" << sol.iterations
                  << " residual=" << sol.residual << " z_c=" << sol.z_c << "\n";
        return sol.residual <= cfg.solver.tol ? exit_code::ok : exit_code::failure;
    } catch (const convergence_error& e) {
        json hist = json::array();
        for (double r : e.residual_history) hist.push_back(r);
        write_error_json(cfg.out_dir, "equilibrium", e.what(), {{"residual_history", hist}});
        manifest.record("equilibrium", {cfg.out_dir / "error.json"}, false);
        std::cerr << "equilibrium failed: " << e.what() << "\n";
        return exit_code::failure;
    }
}

inline EnsembleConfig ensemble_from(const ExperimentConfig& cfg) {
    EnsembleConfig e = EnsembleConfig::high_temperature(cfg.sampler.n_particles, cfg.c,
                                                        cfg.potential, cfg.seed);
    e.mcmc = cfg.sampler.mcmc;
    return e;
}

inline SampleBatch run_sampler(const ExperimentConfig& cfg) {
    const auto ens = ensemble_from(cfg);
    const int threads = resolve_threads(cfg);
    if (cfg.sampler.method == "tridiagonal")
        return tridiagonal_gaussian_sample(ens, cfg.sampler.samples, threads);
    if (cfg.sampler.replicas > 1)
        return mcmc_sample_replicas(ens, cfg.sampler.replicas,
                                    cfg.sampler.samples / cfg.sampler.replicas, threads);
    return mcmc_sample(ens, cfg.sampler.samples);
}

/// `sample` subcommand. With oracle == "tridiagonal" a second exact batch and
/// a two-sample KS comparison record are emitted alongside the main batch.
inline int cmd_sample(const ExperimentConfig& cfg, bool strict = false,
                      const std::string& oracle = "") {
    std::filesystem::create_directories(cfg.out_dir);
    auto manifest = RunManifest::open(cfg.out_dir, config_hash(cfg));
    const auto batch = run_sampler(cfg);
    const auto bin = cfg.out_dir / "batch.bin";
    write_batch(bin, batch);
    std::vector<std::filesystem::path> outputs{bin};
    if (cfg.sampler.emit_csv) {
        const auto csv = cfg.out_dir / "samples.csv";
        write_samples_csv(csv, batch);
        outputs.push_back(csv);
    }

    if (!oracle.empty()) {
        if (oracle != "tridiagonal") {
            std::cerr << "sample: unknown oracle '" << oracle << "'\n";
            return exit_code::config;
        }
        const auto ens = ensemble_from(cfg);
        const auto oracle_batch = tridiagonal_gaussian_sample(ens, cfg.sampler.samples, resolve_threads(cfg));
        const auto obin = cfg.out_dir / "batch_oracle.bin";
        write_batch(obin, oracle_batch);
        std::vector<double> a, b;
        for (const auto& s : batch.samples) a.insert(a.end(), s.lambdas.begin(), s.lambdas.end());
        for (const auto& s : oracle_batch.samples) b.insert(b.end(), s.lambdas.begin(), s.lambdas.end());
        const double d = ks_two_sample(a, b);
        const double crit = ks_two_sample_critical(0.01, static_cast<double>(a.size()),
                                                   static_cast<double>(b.size()));
        json cmp;
        cmp["schema_version"] = kSchemaVersion;
        cmp["ks_distance"] = d;
        cmp["critical_value_1pct"] = crit;
        cmp["pooled_sizes"] = {a.size(), b.size()};
        cmp["pass"] = d < crit;
        const auto cmppath = cfg.out_dir / "ks_comparison.json";
        write_json_file(cmppath, cmp);
        outputs.push_back(obin);
        outputs.push_back(cmppath);
        std::cout << "sampler cross-check: ks=" << d << " crit=" << crit
                  << (d < crit ? " PASS" : " FAIL") << "\n";
    }

    manifest.record("sample", outputs, true,
                    {{"seed", cfg.seed},
                     {"acceptance_rate", batch.chain_diagnostics.acceptance_rate},
                     {"acceptance_warning", batch.chain_diagnostics.acceptance_warning}});
    std::cout << "sample: wrote " << batch.samples.size() << " records (N=" << cfg.sampler.n_particles
              << ", method=" << cfg.sampler.method << ")\n";
    if (batch.chain_diagnostics.acceptance_warning) {
        std::cerr << "warning: post-burn-in acceptance rate " << batch.chain_diagnostics.acceptance_rate
                  << " outside [0.05, 0.9]\n";
        if (strict) return exit_code::strict_warning;
    }
    return exit_code::ok;
}

inline json report_to_json(const PoissonReport& rep) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["energy"] = rep.energy;
    j["half_width"] = rep.half_width;
    j["intensity_ref"] = rep.intensity_ref;
    j["n_replicas"] = rep.n_replicas;
    j["significance"] = rep.significance;
    j["count_mean"] = rep.count_mean;
    j["count_variance"] = rep.count_variance;
    j["no_points"] = rep.no_points;
    if (!rep.no_points) {
        j["fano"] = rep.fano;
        j["fano_band"] = {rep.fano_lo, rep.fano_hi};
        j["chi2"] = {{"stat", rep.chi2.stat}, {"dof", rep.chi2.dof}, {"p_value", rep.chi2.p_value},
                     {"bins", rep.chi2.bins}};
        if (rep.spacing_available)
            j["spacing"] = {{"ks", rep.spacing.ks_distance},
                            {"critical", rep.spacing.critical_value},
                            {"pooled_gaps", rep.spacing.pooled}};
        j["verdicts"] = {{"chi2", rep.chi2_pass},
                         {"fano", rep.fano_pass},
                         {"spacing", rep.spacing_available ? json(rep.spacing_pass) : json(nullptr)}};
    }
    return j;
}

/// `localstats` subcommand: Poisson reports per configured energy, plus the
/// correlation-factorization and two-energy independence diagnostics.
inline int cmd_localstats(const ExperimentConfig& cfg, const std::filesystem::path& batch_path,
                          const std::filesystem::path& equilibrium_json) {
    std::filesystem::create_directories(cfg.out_dir);
    auto manifest = RunManifest::open(cfg.out_dir, config_hash(cfg));

    SampleBatch batch;
    EquilibriumFile eq;
    json eqj;
    try {
        batch = read_batch(batch_path);
        eqj = read_json_file(equilibrium_json);
        eq = read_equilibrium_csv(equilibrium_json.parent_path() / eqj.at("csv").get<std::string>());
    } catch (const error& e) {
        std::cerr << "localstats: " << e.what() << "\n";
        return exit_code::config;
    }

    // the batch and the equilibrium file must describe the same ensemble
    const double c_batch = 0.5 * batch.config.beta * batch.config.n_particles;
    const double c_eq = eqj.at("c").get<double>();
    if (std::fabs(c_batch - c_eq) > 1e-9 * (1.0 + std::fabs(c_eq))) {
        std::cerr << "localstats: batch interaction strength c=" << c_batch
                  << " does not match equilibrium file c=" << c_eq << "\n";
        return exit_code::config;
    }
    if (potential_to_json(batch.config.potential) != eqj.at("potential")) {
        std::cerr << "localstats: batch and equilibrium potentials differ\n";
        return exit_code::config;
    }

    const double W = cfg.localstats.half_width;
    const auto rho = eq.density();
    bool all_pass = true;
    std::vector<std::filesystem::path> outputs;
    std::vector<std::vector<LocalWindow>> windows_per_energy;
    std::vector<std::vector<int>> counts_per_energy;

    for (std::size_t ei = 0; ei < cfg.localstats.energies.size(); ++ei) {
        const double E = cfg.localstats.energies[ei];
        const double rho_ref = rho.at(E);
        auto wins = windows_from_batch(batch, E, W);
        auto rep = counting_report(wins, E, W, rho_ref, cfg.localstats.significance);
        json out = report_to_json(rep);

        auto r1 = correlation_estimate(wins, W, 1, cfg.localstats.k1_bins);
        out["r1"] = {{"edges", r1.edges}, {"values", r1.values}, {"std_errors", r1.std_errors}};
        auto ratio = correlation_ratio(wins, W, cfg.localstats.k2_bins);
        out["r2_over_r1sq"] = {{"nbins", ratio.nbins}, {"cells", ratio.cells},
                               {"ratio", ratio.ratio}, {"std_error", ratio.std_error}};

        const auto path = cfg.out_dir / ("report_E" + std::to_string(ei) + ".json");
        write_json_file(path, out);
        outputs.push_back(path);
        all_pass = all_pass && rep.all_pass();
        std::cout << "localstats E=" << E << ": mean=" << rep.count_mean
                  << " fano=" << rep.fano << " chi2_p=" << rep.chi2.p_value
                  << (rep.all_pass() ? " PASS" : " FAIL") << "\n";

        std::vector<int> counts;
        counts.reserve(wins.size());
        for (const auto& w : wins) counts.push_back(w.count());
        counts_per_energy.push_back(std::move(counts));
        windows_per_energy.push_back(std::move(wins));
    }

    if (cfg.localstats.energies.size() >= 2) {
        const double E0 = cfg.localstats.energies[0], E1 = cfg.localstats.energies[1];
        try {
            const auto ind = two_energy_independence(windows_per_energy[0], windows_per_energy[1],
                                                     batch.config.n_particles, E0, E1, W);
            json j;
            j["schema_version"] = kSchemaVersion;
            j["energies"] = {E0, E1};
            j["covariance"] = ind.covariance;
            j["std_error"] = ind.std_error;
            j["z_score"] = ind.z_score;
            j["pass"] = ind.pass;
            const auto path = cfg.out_dir / "independence.json";
            write_json_file(path, j);
            outputs.push_back(path);
            all_pass = all_pass && ind.pass;
            std::cout << "independence (E=" << E0 << ", E'=" << E1 << "): z=" << ind.z_score
                      << (ind.pass ? " PASS" : " FAIL") << "\n";
        } catch (const error& e) {
            std::cerr << "localstats: " << e.what() << "\n";
            return exit_code::config;
        }
    }

    const auto counts_csv = cfg.out_dir / "counts.csv";
    write_counts_csv(counts_csv, counts_per_energy[0],
                     counts_per_energy.size() > 1 ? counts_per_energy[1] : std::vector<int>{});
    outputs.push_back(counts_csv);
    manifest.record("localstats", outputs, all_pass);
    return all_pass ? exit_code::ok : exit_code::failure;
}

/// `report` subcommand: flatten every JSON in the directory into one CSV.
inline int cmd_report(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        std::cerr << "report: not a directory: " << dir << "\n";
        return exit_code::config;
    }
    std::ostringstream out;
    out << "file,key,value\n";
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".json" && e.path().filename() != "summary.csv")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        json j;
        try {
            j = read_json_file(f);
        } catch (const error& e) {
            std::cerr << "report: skipping " << f.filename() << ": " << e.what() << "\n";
            continue;
        }
        const json flat = j.flatten();
        for (const auto& [key, value] : flat.items()) {
            std::string v = value.dump();
            if (v.find(',') != std::string::npos || v.find('"') != std::string::npos) {
                std::string esc = "\"";
                for (char ch : v) {
                    if (ch == '"') esc += '"';
                    esc += ch;
                }
                esc += '"';
                v = esc;
            }
            out << f.filename().string() << ',' << key << ',' << v << '\n';
        }
    }
    write_text_file(dir / "summary.csv", out.str());
    std::cout << "report: wrote " << (dir / "summary.csv").string() << "\n";
    return exit_code::ok;
}

} // namespace loggas
