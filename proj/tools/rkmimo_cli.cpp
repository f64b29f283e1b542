// Command-line experiment runner.
//
//   rkmimo ber-vs-snr  (--config FILE | --preset NAME) [--seed N] [--out DIR] [--threads N]
//   rkmimo convergence (--config FILE | --preset NAME) [--seed N] [--out DIR] [--threads N]
//   rkmimo flops-table -M 64 -K 8 -T 12 [--omega 3] [--out DIR]

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rkmimo/experiment_io.hpp"
#include "rkmimo/presets.hpp"

namespace fs = std::filesystem;
using namespace rkmimo;

namespace {

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("out: cannot write '" + path.string() + "'");
    out << text;
}

struct ExperimentArgs {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    unsigned threads = 1;
};

void add_experiment_flags(CLI::App* cmd, ExperimentArgs& a) {
    cmd->add_option("--config", a.config_path, "JSON configuration or manifest");
    cmd->add_option("--preset", a.preset, "Named preset (mmimo64-fig3, mmimo64-fig4, xl256-fig5, xl256-fig6)");
    cmd->add_option("--seed", a.seed, "Override the master seed");
    cmd->add_option("--out", a.out_dir, "Output directory");
    cmd->add_option("--threads", a.threads, "Worker threads")->check(CLI::PositiveNumber);
}

int run_experiment_command(sim::ExperimentKind kind, const ExperimentArgs& a) {
    if (a.config_path.empty() == a.preset.empty()) throw ConfigError("config: pass exactly one of --config or --preset");
    sim::ExperimentConfig cfg =
        a.preset.empty() ? io::load_config(io::read_file(a.config_path)) : presets::load(a.preset);
    if (a.seed) cfg.seed = *a.seed;
    if (cfg.kind != kind)
        throw ConfigError("experiment: configuration describes '" + io::to_string(cfg.kind) + "', not '" +
                          io::to_string(kind) + "'");
    sim::validate(cfg);

    io::RunManifest manifest;
    manifest.config = cfg;
    manifest.command = io::to_string(kind);
    manifest.seed = cfg.seed;
    manifest.threads = a.threads;
    manifest.started_utc = utc_now();

    const auto result = sim::run_experiment(cfg, a.threads);

    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    const std::string stem = a.preset.empty() ? io::to_string(kind) : a.preset;
    const fs::path csv = dir / (stem + ".csv");
    write_file(csv, io::ber_csv(result));
    manifest.outputs = {csv.filename().string()};
    manifest.finished_utc = utc_now();
    write_file(dir / (stem + ".manifest.json"), io::manifest_to_json(manifest).dump(2) + "\n");
    std::cout << csv.string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Randomized Kaczmarz receivers for massive and extra-large MIMO uplinks"};
    app.require_subcommand(1);

    ExperimentArgs snr_args, conv_args;
    auto* snr = app.add_subcommand("ber-vs-snr", "BER versus SNR at a fixed iteration budget");
    add_experiment_flags(snr, snr_args);
    auto* conv = app.add_subcommand("convergence", "BER and FLOPs versus iteration budget at a fixed SNR");
    add_experiment_flags(conv, conv_args);

    std::int64_t M = 0, K = 0, T = 0;
    std::optional<std::int64_t> omega;
    std::string flops_out;
    auto* table = app.add_subcommand("flops-table", "Closed-form FLOP counts of every receiver as CSV");
    table->add_option("-M,--antennas", M, "Antennas")->required();
    table->add_option("-K,--users", K, "Users")->required();
    table->add_option("-T,--iterations", T, "Iterations")->required();
    table->add_option("--omega", omega, "RSK working-set size (default ceil(log2 K))");
    table->add_option("--out", flops_out, "Output directory (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*snr) return run_experiment_command(sim::ExperimentKind::BerVsSnr, snr_args);
        if (*conv) return run_experiment_command(sim::ExperimentKind::Convergence, conv_args);
        if (*table) {
            if (K < 1) throw ConfigError("K: must be >= 1");
            if (M < 0 || T < 0) throw ConfigError("M, T: must be nonnegative");
            const auto w = omega.value_or(static_cast<std::int64_t>(default_omega(static_cast<Index>(K))));
            if (w < 0) throw ConfigError("omega: must be nonnegative");
            const std::string csv = io::flops_csv(M, K, T, w);
            if (flops_out.empty()) {
                std::cout << csv;
            } else {
                fs::create_directories(flops_out);
                write_file(fs::path(flops_out) / "flops_table.csv", csv);
            }
            return 0;
        }
    } catch (const rkmimo::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
