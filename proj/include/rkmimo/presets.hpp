#pragma once

// Named experiment configurations shipped with the library.

#include <map>
#include <string>
#include <vector>

#include "rkmimo/experiment_io.hpp"

namespace rkmimo::presets {

inline const std::map<std::string, std::string>& all() {
    static const std::map<std::string, std::string> table{
        // Convergence at 0 dB, compact 64-antenna array, normal and crowded load.
        {"mmimo64-fig3", R"({
  "experiment": "convergence",
  "geometry": "mmimo64",
  "users": [8, 32],
  "iota": [0.0],
  "snr_db": [0.0],
  "schemes": ["MR", "RZF", "nRK", "RK", "GRK", "RSK"],
  "iterations": [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024],
  "drops": 500,
  "symbols_per_drop": 20,
  "seed": 3
})"},
        // BER versus SNR, 64 antennas, 8 users, uncorrelated and iota = 0.5, T = 12.
        {"mmimo64-fig4", R"({
  "experiment": "ber-vs-snr",
  "geometry": "mmimo64",
  "users": [8],
  "iota": [0.0, 0.5],
  "snr_db": [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
  "schemes": ["MR", "RZF", "nRK", "RK", "GRK", "RSK"],
  "iterations": [12],
  "drops": 500,
  "symbols_per_drop": 20,
  "seed": 4
})"},
        // Convergence at 0 dB, 256-antenna edge array, D = 8 visible antennas.
        {"xl256-fig5", R"({
  "experiment": "convergence",
  "geometry": "xl256",
  "users": [32, 128],
  "visible": [8],
  "snr_db": [0.0],
  "schemes": ["MR", "RZF", "nRK", "RK", "GRK", "RSK"],
  "iterations": [1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024],
  "drops": 500,
  "symbols_per_drop": 20,
  "seed": 5
})"},
        // BER versus SNR, 256-antenna edge array, 32 users, D in {8, 16}, T = 64.
        {"xl256-fig6", R"({
  "experiment": "ber-vs-snr",
  "geometry": "xl256",
  "users": [32],
  "visible": [8, 16],
  "snr_db": [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
  "schemes": ["MR", "RZF", "nRK", "RK", "GRK", "RSK"],
  "iterations": [64],
  "drops": 500,
  "symbols_per_drop": 20,
  "seed": 6
})"},
    };
    return table;
}

inline std::vector<std::string> names() {
    std::vector<std::string> out;
    for (const auto& [name, text] : all()) out.push_back(name);
    return out;
}

inline sim::ExperimentConfig load(const std::string& name) {
    const auto& table = all();
    const auto it = table.find(name);
    if (it == table.end()) throw ConfigError("preset: unknown name '" + name + "'");
    return io::load_config(it->second);
}

} // namespace rkmimo::presets
