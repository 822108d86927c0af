#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "loggas/equilibrium.hpp"
#include "loggas/sampler.hpp"

namespace loggas {

using json = nlohmann::json;

constexpr int kSchemaVersion = 1;
constexpr char kBatchMagic[9] = "LGASBAT1";

// ---- JSON <-> domain types ----

inline json potential_to_json(const PotentialSpec& p) {
    json j;
    switch (p.kind) {
    case PotentialKind::gaussian: j["kind"] = "gaussian"; break;
    case PotentialKind::even_polynomial:
        j["kind"] = "even_polynomial";
        j["coeffs"] = p.coeffs;
        break;
    case PotentialKind::tabulated:
        j["kind"] = "tabulated";
        j["x"] = p.table_x;
        j["v"] = p.table_v;
        break;
    }
    if (p.shift != 0.0) j["shift"] = p.shift;
    return j;
}

inline PotentialSpec potential_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    const double shift = j.value("shift", 0.0);
    if (kind == "gaussian") {
        auto p = PotentialSpec::gaussian();
        p.shift = shift;
        return p;
    }
    if (kind == "even_polynomial")
        return PotentialSpec::even_polynomial(j.at("coeffs").get<std::vector<double>>(), shift);
    if (kind == "tabulated") {
        if (j.contains("table_path")) {
            // resolved by the caller (needs filesystem access); see load_tabulated_csv
            throw error("potential_from_json: unresolved table_path");
        }
        return PotentialSpec::tabulated(j.at("x").get<std::vector<double>>(),
                                        j.at("v").get<std::vector<double>>(), shift);
    }
    throw error("potential_from_json: unknown kind '" + kind + "'");
}

/// Two-column CSV (x,value), strictly increasing x; '#' comments and an
/// optional header row are skipped.
inline PotentialSpec load_tabulated_csv(const std::filesystem::path& path, double shift = 0.0) {
    std::ifstream in(path);
    if (!in) throw error("cannot open table file: " + path.string());
    std::vector<double> xs, vs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw error("malformed table row in " + path.string() + ": " + line);
        try {
            xs.push_back(std::stod(line.substr(0, comma)));
            vs.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            if (xs.empty() && vs.empty()) continue; // header row
            throw error("malformed table row in " + path.string() + ": " + line);
        }
    }
    return PotentialSpec::tabulated(std::move(xs), std::move(vs), shift);
}

// ---- small file helpers ----

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot write " + path.string());
    out << content;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
    write_text_file(path, j.dump(2) + "\n");
}

inline json read_json_file(const std::filesystem::path& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw error("invalid JSON in " + path.string() + ": " + e.what());
    }
}

// ---- equilibrium solution CSV/JSON ----

inline void write_equilibrium_csv(const std::filesystem::path& path, const EquilibriumSolution& sol) {
    std::ostringstream out;
    out.precision(17);
    out << "x,rho_c,u_c\n";
    for (int i = 0; i < sol.rho.grid.n; ++i)
        out << sol.rho.grid.node(i) << ',' << sol.rho.values[i] << ',' << sol.log_potential[i] << '\n';
    write_text_file(path, out.str());
}

struct EquilibriumFile {
    Grid grid;
    std::vector<double> rho;
    std::vector<double> u;

    DensityOnGrid density() const {
        DensityOnGrid d;
        d.grid = grid;
        d.values = rho;
        return d;
    }
};

inline EquilibriumFile read_equilibrium_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot open " + path.string());
    std::string line;
    std::vector<double> xs, rs, us;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == 'x' || line[0] == '#') continue;
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw error("malformed equilibrium CSV row in " + path.string());
        xs.push_back(std::stod(line.substr(0, c1)));
        rs.push_back(std::stod(line.substr(c1 + 1, c2 - c1 - 1)));
        us.push_back(std::stod(line.substr(c2 + 1)));
    }
    if (xs.size() < 3) throw error("equilibrium CSV too short: " + path.string());
    EquilibriumFile f;
    f.grid = Grid(xs.front(), xs.back(), static_cast<int>(xs.size()));
    f.rho = std::move(rs);
    f.u = std::move(us);
    return f;
}

// ---- batch container: JSON header + little-endian f64 records ----

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::uint64_t get_u64(const char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
}

inline void put_f64(std::string& out, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    put_u64(out, v);
}

inline double get_f64(const char* p) {
    const std::uint64_t v = get_u64(p);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}

} // namespace detail

inline json batch_header_json(const SampleBatch& batch) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["n_particles"] = batch.config.n_particles;
    j["beta"] = batch.config.beta;
    j["count"] = batch.samples.size();
    j["seed"] = batch.config.seed;
    j["potential"] = potential_to_json(batch.config.potential);
    j["mcmc"] = {{"step_size", batch.config.mcmc.step_size},
                 {"sweeps_burnin", batch.config.mcmc.sweeps_burnin},
                 {"sweeps_between", batch.config.mcmc.sweeps_between},
                 {"target_acceptance", batch.config.mcmc.target_acceptance},
                 {"adapt", batch.config.mcmc.adapt}};
    j["provenance"] = batch.samples.empty() ? "mcmc" : provenance_name(batch.samples.front().provenance);
    j["diagnostics"] = {{"acceptance_rate", batch.chain_diagnostics.acceptance_rate},
                        {"final_step_size", batch.chain_diagnostics.final_step_size},
                        {"sweeps_total", batch.chain_diagnostics.sweeps_total},
                        {"acceptance_warning", batch.chain_diagnostics.acceptance_warning}};
    return j;
}

inline std::string encode_batch(const SampleBatch& batch) {
    const std::string header = batch_header_json(batch).dump();
    std::string out;
    out.reserve(24 + header.size() + batch.samples.size() * batch.config.n_particles * 8);
    out.append(kBatchMagic, 8);
    detail::put_u64(out, header.size());
    out += header;
    for (const auto& s : batch.samples) {
        if (static_cast<int>(s.lambdas.size()) != batch.config.n_particles)
            throw error("encode_batch: inconsistent record length");
        for (double v : s.lambdas) detail::put_f64(out, v);
    }
    return out;
}

inline void write_batch(const std::filesystem::path& path, const SampleBatch& batch) {
    write_text_file(path, encode_batch(batch));
}

inline SampleBatch decode_batch(const std::string& bytes, const std::string& origin = "<memory>") {
    if (bytes.size() < 16 || bytes.compare(0, 8, kBatchMagic, 8) != 0)
        throw error("not a batch container: " + origin);
    const std::uint64_t hlen = detail::get_u64(bytes.data() + 8);
    if (16 + hlen > bytes.size()) throw error("truncated batch header: " + origin);
    json h;
    try {
        h = json::parse(bytes.substr(16, hlen));
    } catch (const json::parse_error& e) {
        throw error("corrupt batch header in " + origin + ": " + e.what());
    }

    SampleBatch batch;
    Provenance prov = Provenance::mcmc;
    std::size_t count = 0;
    try {
        batch.config.n_particles = h.at("n_particles").get<int>();
        batch.config.beta = h.at("beta").get<double>();
        batch.config.seed = h.at("seed").get<std::uint64_t>();
        batch.config.potential = potential_from_json(h.at("potential"));
        const auto& m = h.at("mcmc");
        batch.config.mcmc.step_size = m.at("step_size").get<double>();
        batch.config.mcmc.sweeps_burnin = m.at("sweeps_burnin").get<int>();
        batch.config.mcmc.sweeps_between = m.at("sweeps_between").get<int>();
        batch.config.mcmc.target_acceptance = m.at("target_acceptance").get<double>();
        batch.config.mcmc.adapt = m.at("adapt").get<bool>();
        const auto& d = h.at("diagnostics");
        batch.chain_diagnostics.acceptance_rate = d.at("acceptance_rate").get<double>();
        batch.chain_diagnostics.final_step_size = d.at("final_step_size").get<double>();
        batch.chain_diagnostics.sweeps_total = d.at("sweeps_total").get<long long>();
        batch.chain_diagnostics.acceptance_warning = d.at("acceptance_warning").get<bool>();
        const std::string pv = h.value("provenance", "mcmc");
        if (pv == "tridiagonal") prov = Provenance::tridiagonal;
        else if (pv == "brute") prov = Provenance::brute;
        count = h.at("count").get<std::size_t>();
    } catch (const json::exception& e) {
        throw error("corrupt batch header in " + origin + ": " + e.what());
    }
    const std::size_t n = static_cast<std::size_t>(batch.config.n_particles);
    if (bytes.size() != 16 + hlen + count * n * 8)
        throw error("batch body size mismatch in " + origin);
    batch.samples.resize(count);
    const char* p = bytes.data() + 16 + hlen;
    for (std::size_t s = 0; s < count; ++s) {
        auto& rec = batch.samples[s];
        rec.provenance = prov;
        rec.lambdas.resize(n);
        for (std::size_t i = 0; i < n; ++i, p += 8) rec.lambdas[i] = detail::get_f64(p);
    }
    return batch;
}

inline SampleBatch read_batch(const std::filesystem::path& path) {
    return decode_batch(read_text_file(path), path.string());
}

inline void write_samples_csv(const std::filesystem::path& path, const SampleBatch& batch) {
    std::ostringstream out;
    out.precision(17);
    for (const auto& s : batch.samples) {
        for (std::size_t i = 0; i < s.lambdas.size(); ++i)
            out << (i ? "," : "") << s.lambdas[i];
        out << '\n';
    }
    write_text_file(path, out.str());
}

inline void write_counts_csv(const std::filesystem::path& path, const std::vector<int>& counts_e,
                             const std::vector<int>& counts_eprime) {
    std::ostringstream out;
    out << "replica,count_e,count_eprime\n";
    for (std::size_t r = 0; r < counts_e.size(); ++r) {
        out << r << ',' << counts_e[r] << ',';
        if (r < counts_eprime.size()) out << counts_eprime[r];
        out << '\n';
    }
    write_text_file(path, out.str());
}

} // namespace loggas
