#pragma once

// JSON experiment configuration, CSV emission and run manifests.
//
// Configuration document (unknown keys are rejected):
//
//   {
//     "experiment": "ber-vs-snr" | "convergence",
//     "geometry": "mmimo64" | "xl256",
//     "users": [8],                 // K values
//     "iota": [0.0, 0.5],           // correlation coefficients (optional)
//     "visible": [8, 16],           // VR widths D (optional, implies iota = 0)
//     "snr_db": [-10, 0, 10],
//     "schemes": ["MR", "RZF", "nRK", "RK", "GRK", "RSK"],
//     "iterations": [12],           // strictly increasing budgets T
//     "omega": 3,                   // optional RSK working-set size
//     "drops": 500,
//     "symbols_per_drop": 20,
//     "seed": 1
//   }

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rkmimo/flops.hpp"
#include "rkmimo/sim.hpp"

namespace rkmimo::io {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

inline std::string to_string(sim::ExperimentKind k) {
    return k == sim::ExperimentKind::BerVsSnr ? "ber-vs-snr" : "convergence";
}

namespace detail {

template <class T>
T get_field(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
    }
}

} // namespace detail

inline sim::ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("config: document must be a JSON object");
    static const std::set<std::string> known{"experiment", "geometry", "users", "iota", "visible", "snr_db", "schemes",
                                             "iterations", "omega", "drops", "symbols_per_drop", "seed"};
    for (const auto& [key, value] : j.items())
        if (!known.contains(key)) throw ConfigError(key + ": unknown key");
    for (const char* required : {"experiment", "geometry", "users", "snr_db", "schemes", "iterations", "seed"})
        if (!j.contains(required)) throw ConfigError(std::string(required) + ": required key missing");

    sim::ExperimentConfig c;
    const auto kind = detail::get_field<std::string>(j, "experiment");
    if (kind == "ber-vs-snr") {
        c.kind = sim::ExperimentKind::BerVsSnr;
    } else if (kind == "convergence") {
        c.kind = sim::ExperimentKind::Convergence;
    } else {
        throw ConfigError("experiment: expected 'ber-vs-snr' or 'convergence'");
    }
    c.geometry = detail::get_field<std::string>(j, "geometry");
    c.users = detail::get_field<std::vector<Index>>(j, "users");
    c.iota = j.contains("iota") ? detail::get_field<std::vector<double>>(j, "iota") : std::vector<double>{0.0};
    if (j.contains("visible")) c.visible = detail::get_field<std::vector<Index>>(j, "visible");
    c.snr_db = detail::get_field<std::vector<double>>(j, "snr_db");
    c.schemes.clear();
    for (const auto& name : detail::get_field<std::vector<std::string>>(j, "schemes")) {
        try {
            c.schemes.push_back(scheme_from_string(name));
        } catch (const ModelError& e) {
            throw ConfigError(std::string("schemes: ") + e.what());
        }
    }
    c.iterations = detail::get_field<std::vector<std::size_t>>(j, "iterations");
    if (j.contains("omega") && !j.at("omega").is_null()) c.omega = detail::get_field<Index>(j, "omega");
    if (j.contains("drops")) c.drops = detail::get_field<Index>(j, "drops");
    if (j.contains("symbols_per_drop")) c.symbols_per_drop = detail::get_field<Index>(j, "symbols_per_drop");
    c.seed = detail::get_field<std::uint64_t>(j, "seed");
    sim::validate(c);
    return c;
}

inline json config_to_json(const sim::ExperimentConfig& c) {
    json j;
    j["experiment"] = to_string(c.kind);
    j["geometry"] = c.geometry;
    j["users"] = c.users;
    j["iota"] = c.iota;
    if (!c.visible.empty()) j["visible"] = c.visible;
    j["snr_db"] = c.snr_db;
    std::vector<std::string> names;
    for (Scheme s : c.schemes) names.push_back(rkmimo::to_string(s));
    j["schemes"] = names;
    j["iterations"] = c.iterations;
    if (c.omega) j["omega"] = *c.omega;
    j["drops"] = c.drops;
    j["symbols_per_drop"] = c.symbols_per_drop;
    j["seed"] = c.seed;
    return j;
}

/// Accepts either a bare configuration or a manifest carrying one under "config".
inline sim::ExperimentConfig load_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    if (j.is_object() && j.contains("config") && j.contains("tool_version")) return config_from_json(j.at("config"));
    return config_from_json(j);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// FNV-1a over the canonical configuration text.
inline std::uint64_t config_hash(const sim::ExperimentConfig& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : config_to_json(c).dump()) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

//------------------------------------------------------------------------------
// CSV
//------------------------------------------------------------------------------

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline constexpr const char* kBerHeader =
    "scheme,M,K,D,iota,snr_db,iterations,bits,bit_errors,ber,flops_model,flops_effective,seed";

inline std::string ber_csv(const sim::BerResult& r) {
    std::string out = kBerHeader;
    out += '\n';
    for (const auto& row : r.rows) {
        out += rkmimo::to_string(row.scheme) + ',' + std::to_string(row.M) + ',' + std::to_string(row.K) + ',' +
               std::to_string(row.D) + ',' + format_double(row.iota) + ',' + format_double(row.snr_db) + ',' +
               std::to_string(row.iterations) + ',' + std::to_string(row.bits) + ',' + std::to_string(row.bit_errors) +
               ',' + format_double(row.ber) + ',' + format_double(row.flops_model) + ',' +
               format_double(row.flops_effective) + ',' + std::to_string(row.seed) + '\n';
    }
    return out;
}

inline constexpr const char* kFlopsHeader = "scheme,M,K,T,omega,flops,relaxation_pct,reference_flops,reference_status";

/// reference_status: "match", "erratum" (reference differs from the closed
/// form) or empty when no reference exists for the configuration.
inline std::string flops_csv(flops::count_t M, flops::count_t K, flops::count_t T, flops::count_t omega) {
    std::string out = kFlopsHeader;
    out += '\n';
    for (const auto& row : flops::flops_table(M, K, T, omega)) {
        out += rkmimo::to_string(row.scheme) + ',' + std::to_string(M) + ',' + std::to_string(K) + ',' +
               std::to_string(T) + ',' + std::to_string(omega) + ',' + std::to_string(row.flops) + ',' +
               format_double(row.relaxation_pct) + ',';
        if (row.reference) {
            out += std::to_string(*row.reference) + ',' + (row.erratum() ? "erratum" : "match");
        } else {
            out += ',';
        }
        out += '\n';
    }
    return out;
}

//------------------------------------------------------------------------------
// Manifest
//------------------------------------------------------------------------------

struct RunManifest {
    sim::ExperimentConfig config;
    std::string command;
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::vector<std::string> outputs;
    std::string started_utc;
    std::string finished_utc;
};

inline json manifest_to_json(const RunManifest& m) {
    json j;
    j["tool"] = "rkmimo";
    j["tool_version"] = kToolVersion;
    j["command"] = m.command;
    j["seed"] = m.seed;
    j["config"] = config_to_json(m.config);
    j["config_hash"] = config_hash(m.config);
    j["threads"] = m.threads;
    j["outputs"] = m.outputs;
    j["started_utc"] = m.started_utc;
    j["finished_utc"] = m.finished_utc;
    return j;
}

} // namespace rkmimo::io
