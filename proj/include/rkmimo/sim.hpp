#pragma once

// Monte-Carlo uplink BER simulation: 16-QAM payloads, y = sqrt(rho) H x + n,
// detection with every configured receiver, and order-independent
// aggregation of bit errors.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "rkmimo/channel.hpp"
#include "rkmimo/flops.hpp"
#include "rkmimo/sle.hpp"
#include "rkmimo/solvers.hpp"

namespace rkmimo::sim {

//------------------------------------------------------------------------------
// 16-QAM
//------------------------------------------------------------------------------

/// Unit-energy 16-QAM. A 4-bit label b3 b2 b1 b0 (b3 most significant) maps
/// its two high bits to the in-phase level and its two low bits to the
/// quadrature level with the per-axis Gray code 00 -> -3, 01 -> -1, 11 -> +1,
/// 10 -> +3, scaled by 1/sqrt(10).
class Constellation {
public:
    static constexpr Index kBitsPerSymbol = 4;
    static constexpr Index kSize = 16;

    Constellation() {
        const double s = 1.0 / std::sqrt(10.0);
        for (unsigned label = 0; label < kSize; ++label)
            points_[label] = {s * axis_level(label >> 2), s * axis_level(label & 3u)};
    }

    static double axis_level(unsigned pair) {
        static constexpr std::array<double, 4> levels{-3.0, -1.0, 3.0, 1.0};
        return levels[pair & 3u];
    }

    const cplx& point(unsigned label) const { return points_.at(label); }
    const std::array<cplx, kSize>& points() const noexcept { return points_; }

    /// Nearest point in Euclidean distance; ties resolve to the lowest label.
    unsigned nearest(cplx z) const {
        unsigned best = 0;
        double best_d = std::norm(z - points_[0]);
        for (unsigned label = 1; label < kSize; ++label) {
            const double d = std::norm(z - points_[label]);
            if (d < best_d) {
                best_d = d;
                best = label;
            }
        }
        return best;
    }

private:
    std::array<cplx, kSize> points_{};
};

inline const Constellation& qam16() {
    static const Constellation c;
    return c;
}

/// Groups bits into 4-bit labels (first bit most significant) and maps them.
inline ComplexVector qam_modulate(std::span<const std::uint8_t> bits, const Constellation& c = qam16()) {
    if (bits.size() % Constellation::kBitsPerSymbol != 0)
        throw FramingError("qam_modulate: bit count must be a multiple of 4");
    ComplexVector x(bits.size() / Constellation::kBitsPerSymbol);
    for (Index k = 0; k < x.size(); ++k) {
        unsigned label = 0;
        for (Index j = 0; j < Constellation::kBitsPerSymbol; ++j) label = (label << 1) | (bits[4 * k + j] & 1u);
        x[k] = c.point(label);
    }
    return x;
}

/// Minimum-distance decisions on soft_k / scale_k.
inline std::vector<std::uint8_t> qam_demodulate(std::span<const cplx> soft, std::span<const double> scale,
                                                const Constellation& c = qam16()) {
    if (scale.size() != soft.size()) throw DimensionError("qam_demodulate: one scale per symbol required");
    std::vector<std::uint8_t> bits(soft.size() * Constellation::kBitsPerSymbol);
    for (Index k = 0; k < soft.size(); ++k) {
        if (!(scale[k] > 0.0)) throw DomainError("qam_demodulate: scale must be positive");
        const unsigned label = c.nearest(soft[k] / scale[k]);
        for (Index j = 0; j < Constellation::kBitsPerSymbol; ++j)
            bits[4 * k + j] = static_cast<std::uint8_t>((label >> (3 - j)) & 1u);
    }
    return bits;
}

inline std::vector<std::uint8_t> qam_demodulate(std::span<const cplx> soft, double scale, const Constellation& c = qam16()) {
    const std::vector<double> s(soft.size(), scale);
    return qam_demodulate(soft, s, c);
}

inline std::uint64_t count_bit_errors(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    if (a.size() != b.size()) throw DimensionError("count_bit_errors: length mismatch");
    std::uint64_t e = 0;
    for (Index i = 0; i < a.size(); ++i) e += (a[i] != b[i]) ? 1 : 0;
    return e;
}

//------------------------------------------------------------------------------
// Experiment configuration
//------------------------------------------------------------------------------

enum class ExperimentKind { BerVsSnr, Convergence };

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::BerVsSnr;
    std::string geometry = "mmimo64";
    std::vector<Index> users{8};
    /// Antenna correlation coefficients (all antennas visible).
    std::vector<double> iota{0.0};
    /// Visibility-region widths D; empty for stationary channels.
    std::vector<Index> visible;
    std::vector<double> snr_db{0.0};
    std::vector<Scheme> schemes{Scheme::MR, Scheme::RZF, Scheme::nRK, Scheme::RK, Scheme::GRK, Scheme::RSK};
    /// Iteration budgets; shared by every iterative scheme.
    std::vector<std::size_t> iterations{12};
    /// RSK working-set size; ceil(log2 K) when unset.
    std::optional<Index> omega;
    Index drops = 500;
    Index symbols_per_drop = 20;
    std::uint64_t seed = 1;
};

inline channel::CellGeometry geometry_by_name(const std::string& name) {
    if (name == "mmimo64") return channel::CellGeometry::mmimo64();
    if (name == "xl256") return channel::CellGeometry::xl256();
    throw ConfigError("geometry: unknown preset '" + name + "' (expected mmimo64 or xl256)");
}

inline bool is_iterative(Scheme s) {
    return s == Scheme::nRK || s == Scheme::RK || s == Scheme::GRK || s == Scheme::RSK;
}

/// Throws ConfigError naming the offending field and constraint.
inline void validate(const ExperimentConfig& c) {
    const auto g = geometry_by_name(c.geometry);
    if (c.users.empty()) throw ConfigError("users: must list at least one user count");
    for (Index K : c.users)
        if (K < 1 || K > g.antennas) throw ConfigError("users: each K must satisfy 1 <= K <= M");
    if (c.snr_db.empty()) throw ConfigError("snr_db: grid must be nonempty");
    for (double s : c.snr_db)
        if (!std::isfinite(s)) throw ConfigError("snr_db: values must be finite");
    if (c.schemes.empty()) throw ConfigError("schemes: must list at least one scheme");
    for (Scheme s : c.schemes)
        if (s == Scheme::TPE) throw ConfigError("schemes: TPE is available in the FLOP model only");
    if (c.iterations.empty()) throw ConfigError("iterations: grid must be nonempty");
    if (!std::is_sorted(c.iterations.begin(), c.iterations.end()) ||
        std::adjacent_find(c.iterations.begin(), c.iterations.end()) != c.iterations.end())
        throw ConfigError("iterations: values must be strictly increasing");
    if (c.drops < 1) throw ConfigError("drops: must be >= 1");
    if (c.symbols_per_drop < 1) throw ConfigError("symbols_per_drop: must be >= 1");
    if (c.iota.empty() && c.visible.empty()) throw ConfigError("iota: must be nonempty when no visibility widths are given");
    for (double i : c.iota)
        if (!(i >= 0.0 && i < 1.0)) throw ConfigError("iota: values must lie in [0, 1)");
    if (!c.visible.empty()) {
        for (double i : c.iota)
            if (i != 0.0) throw ConfigError("iota: visibility regions require uncorrelated antennas (iota = 0)");
        for (Index D : c.visible)
            if (D < 1 || D > g.antennas) throw ConfigError("visible: each D must satisfy 1 <= D <= M");
    }
    if (c.omega) {
        for (Index K : c.users)
            if (*c.omega < 1 || *c.omega > K) throw ConfigError("omega: must satisfy 1 <= omega <= K");
    }
    if (c.kind == ExperimentKind::BerVsSnr && c.iterations.size() != 1)
        throw ConfigError("iterations: ber-vs-snr sweeps take exactly one iteration budget");
    if (c.kind == ExperimentKind::Convergence && c.snr_db.size() != 1)
        throw ConfigError("snr_db: convergence sweeps take exactly one SNR");
}

/// One channel model inside the experiment grid.
struct Scenario {
    Index users = 0;
    double iota = 0.0;
    /// Visibility width, or nullopt for all antennas visible.
    std::optional<Index> visible;
};

inline std::vector<Scenario> scenarios(const ExperimentConfig& c) {
    std::vector<Scenario> out;
    for (Index K : c.users) {
        if (c.visible.empty()) {
            for (double i : c.iota) out.push_back({K, i, std::nullopt});
        } else {
            for (Index D : c.visible) out.push_back({K, 0.0, D});
        }
    }
    return out;
}

//------------------------------------------------------------------------------
// Trials
//------------------------------------------------------------------------------

/// Integer tallies for one (snr, scheme, iteration budget) cell.
struct Tally {
    std::uint64_t bits = 0;
    std::uint64_t bit_errors = 0;
    std::uint64_t detections = 0;
    /// Sums over detections.
    std::uint64_t flops_model = 0;
    std::uint64_t flops_effective = 0;

    Tally& operator+=(const Tally& o) {
        bits += o.bits;
        bit_errors += o.bit_errors;
        detections += o.detections;
        flops_model += o.flops_model;
        flops_effective += o.flops_effective;
        return *this;
    }
    bool operator==(const Tally&) const = default;
};

/// Tallies indexed [snr][scheme][iteration budget].
struct TrialCounts {
    std::vector<Tally> cells;
    Index n_snr = 0, n_schemes = 0, n_iterations = 0;

    TrialCounts() = default;
    TrialCounts(Index s, Index c, Index t) : cells(s * c * t), n_snr{s}, n_schemes{c}, n_iterations{t} {}

    Tally& at(Index s, Index c, Index t) { return cells[(s * n_schemes + c) * n_iterations + t]; }
    const Tally& at(Index s, Index c, Index t) const { return cells[(s * n_schemes + c) * n_iterations + t]; }

    TrialCounts& operator+=(const TrialCounts& o) {
        for (Index i = 0; i < cells.size(); ++i) cells[i] += o.cells[i];
        return *this;
    }
    bool operator==(const TrialCounts&) const = default;
};

inline std::uint64_t trial_seed(std::uint64_t master, Index scenario_index, Index trial_index) {
    return SeededRng::derive(master, scenario_index, trial_index);
}

/// Inputs to one detection problem, exposed for tests and tools.
struct ReceivedVector {
    std::vector<std::uint8_t> bits;
    ComplexVector x;
    ComplexVector y;
    double rho = 1.0;
};

/// y = sqrt(rho) H x + n with n ~ CN(0, sigma2 I_M) and uniform payload bits.
inline ReceivedVector synthesize(const ComplexMatrix& H, double rho, double sigma2, SeededRng& rng) {
    ReceivedVector rv;
    rv.rho = rho;
    rv.bits.resize(H.cols() * Constellation::kBitsPerSymbol);
    for (auto& b : rv.bits) b = rng.bit() ? 1 : 0;
    rv.x = qam_modulate(rv.bits);
    rv.y = matvec(H, rv.x);
    const double amp = std::sqrt(rho);
    const double noise = std::sqrt(sigma2);
    for (auto& v : rv.y) v = amp * v + noise * rng.complex_normal();
    return rv;
}

/// Draws the channel of one trial.
inline channel::ChannelRealization trial_channel(const channel::CellGeometry& g, const Scenario& sc, SeededRng& rng,
                                                 std::uint64_t config_hash = 0) {
    const auto drop = channel::drop_users(g, sc.users, rng);
    const auto ls = channel::large_scale(g, drop, channel::median_cell_gain(g));
    std::optional<channel::VisibilityMask> mask;
    if (sc.visible) mask = channel::build_visibility(g.antennas, *sc.visible, sc.users, rng);
    const auto cov = channel::build_covariance(ls, mask, sc.iota);
    return channel::sample_channel(cov, rng, config_hash);
}

/// Runs every configured receiver on `symbols_per_drop` received vectors per
/// SNR point over one channel drop. The trial RNG is a pure function of
/// (master seed, scenario index, trial index).
inline TrialCounts run_trial(const ExperimentConfig& c, Index scenario_index, Index trial_index) {
    const auto g = geometry_by_name(c.geometry);
    const auto sc = scenarios(c).at(scenario_index);
    const Index K = sc.users;
    const auto M = static_cast<flops::count_t>(g.antennas);
    const Index omega = c.omega.value_or(default_omega(K));
    const std::uint64_t seed = trial_seed(c.seed, scenario_index, trial_index);
    SeededRng rng(seed);
    const auto ch = trial_channel(g, sc, rng);

    TrialCounts counts(c.snr_db.size(), c.schemes.size(), c.iterations.size());
    const double sigma2 = 1.0;
    const std::size_t t_max = c.iterations.back();

    for (Index s = 0; s < c.snr_db.size(); ++s) {
        const double rho = channel::db_to_linear(c.snr_db[s]) * sigma2;
        const double xi = sigma2 / rho;
        for (Index j = 0; j < c.symbols_per_drop; ++j) {
            SeededRng vrng(SeededRng::derive(seed, s + 1, j));
            const auto rv = synthesize(ch.H, rho, sigma2, vrng);
            KernelContext actx;
            const SleSystem sle = assemble_sle(ch.H, rv.y, xi, ch.support, false, &actx);
            const std::uint64_t setup_flops = 8 * actx.macs;
            const double amp = std::sqrt(rho);

            for (Index q = 0; q < c.schemes.size(); ++q) {
                const Scheme scheme = c.schemes[q];
                auto record = [&](Index ti, std::span<const cplx> est, std::span<const double> scale,
                                  std::uint64_t model, std::uint64_t effective) {
                    Tally& cell = counts.at(s, q, ti);
                    const auto decided = qam_demodulate(est, scale);
                    cell.bits += rv.bits.size();
                    cell.bit_errors += count_bit_errors(decided, rv.bits);
                    cell.detections += 1;
                    cell.flops_model += model;
                    cell.flops_effective += effective;
                };
                if (scheme == Scheme::MR || scheme == Scheme::RZF) {
                    std::vector<double> scale(K, amp);
                    ComplexVector est;
                    std::uint64_t model = 0;
                    if (scheme == Scheme::MR) {
                        // Matched-filter outputs carry the per-user gain ||h_k||^2.
                        est = mr_estimate(sle).values;
                        for (Index k = 0; k < K; ++k) scale[k] = amp * std::max(sle.energies[k] - xi, 1e-300);
                        model = static_cast<std::uint64_t>(flops::flops_formula({Scheme::MR, M, static_cast<flops::count_t>(K)}));
                    } else {
                        KernelContext gctx{true, 0};
                        const ComplexMatrix R = regularized_gram(sle, gctx);
                        est = solve_hpd(R, sle.b);
                        model = static_cast<std::uint64_t>(flops::flops_formula({Scheme::RZF, M, static_cast<flops::count_t>(K)}));
                    }
                    for (Index ti = 0; ti < c.iterations.size(); ++ti) record(ti, est, scale, model, model);
                    continue;
                }
                SolverConfig cfg;
                cfg.scheme = scheme;
                cfg.max_iterations = t_max;
                cfg.omega = omega;
                cfg.seed = SeededRng::derive(vrng.seed(), 0x5c4e3e, static_cast<std::uint64_t>(scheme));
                cfg.checkpoints = c.iterations;
                const auto res = run_solver(sle, cfg);
                const std::vector<double> scale(K, amp);
                for (Index ti = 0; ti < c.iterations.size(); ++ti) {
                    const auto model = flops::flops_formula({scheme, M, static_cast<flops::count_t>(K),
                                                             static_cast<flops::count_t>(res.snapshot_iterations[ti]),
                                                             static_cast<flops::count_t>(omega)});
                    record(ti, res.snapshots[ti], scale, static_cast<std::uint64_t>(model),
                           setup_flops + res.snapshot_flops_effective[ti]);
                }
            }
        }
    }
    return counts;
}

//------------------------------------------------------------------------------
// Experiments
//------------------------------------------------------------------------------

struct BerRow {
    Scheme scheme;
    Index M = 0;
    Index K = 0;
    Index D = 0;
    double iota = 0.0;
    double snr_db = 0.0;
    std::size_t iterations = 0;
    std::uint64_t bits = 0;
    std::uint64_t bit_errors = 0;
    double ber = 0.0;
    /// Means per detection.
    double flops_model = 0.0;
    double flops_effective = 0.0;
    std::uint64_t seed = 0;
};

struct BerResult {
    std::vector<BerRow> rows;
    std::uint64_t seed = 0;
};

/// Aggregates run_trial over the whole grid on `threads` workers. Work units
/// are (scenario, trial) pairs with absolute seeds and the reduction sums
/// integers, so the result does not depend on scheduling.
inline BerResult run_experiment(const ExperimentConfig& c, unsigned threads = 1) {
    validate(c);
    const auto g = geometry_by_name(c.geometry);
    const auto grid = scenarios(c);
    channel::median_cell_gain(g);

    const Index n_units = grid.size() * c.drops;
    std::vector<TrialCounts> per_scenario(grid.size(), TrialCounts(c.snr_db.size(), c.schemes.size(), c.iterations.size()));
    std::vector<TrialCounts> partial(n_units);
    std::atomic<Index> next{0};
    std::vector<std::exception_ptr> errors(std::max(1u, threads));

    auto worker = [&](unsigned id) {
        try {
            for (Index u = next.fetch_add(1); u < n_units; u = next.fetch_add(1))
                partial[u] = run_trial(c, u / c.drops, u % c.drops);
        } catch (...) {
            errors[id] = std::current_exception();
            next.store(n_units);
        }
    };
    if (threads <= 1) {
        worker(0);
    } else {
        std::vector<std::jthread> pool;
        for (unsigned id = 0; id < threads; ++id) pool.emplace_back(worker, id);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    for (Index u = 0; u < n_units; ++u) per_scenario[u / c.drops] += partial[u];

    BerResult out;
    out.seed = c.seed;
    for (Index si = 0; si < grid.size(); ++si) {
        const auto& sc = grid[si];
        for (Index q = 0; q < c.schemes.size(); ++q) {
            for (Index s = 0; s < c.snr_db.size(); ++s) {
                for (Index ti = 0; ti < c.iterations.size(); ++ti) {
                    const Tally& t = per_scenario[si].at(s, q, ti);
                    BerRow row;
                    row.scheme = c.schemes[q];
                    row.M = g.antennas;
                    row.K = sc.users;
                    row.D = sc.visible.value_or(g.antennas);
                    row.iota = sc.iota;
                    row.snr_db = c.snr_db[s];
                    row.iterations = is_iterative(row.scheme) ? c.iterations[ti] : 0;
                    row.bits = t.bits;
                    row.bit_errors = t.bit_errors;
                    row.ber = t.bits ? static_cast<double>(t.bit_errors) / static_cast<double>(t.bits) : 0.0;
                    const double n = t.detections ? static_cast<double>(t.detections) : 1.0;
                    row.flops_model = static_cast<double>(t.flops_model) / n;
                    row.flops_effective = static_cast<double>(t.flops_effective) / n;
                    row.seed = c.seed;
                    if (!is_iterative(row.scheme) && ti > 0) continue;
                    out.rows.push_back(row);
                }
            }
        }
    }
    return out;
}

/// BER of `scheme` at (snr index, iteration budget index), pooled over scenarios.
inline double pooled_ber(const BerResult& r, Scheme scheme, double snr_db, std::size_t iterations) {
    std::uint64_t bits = 0, errs = 0;
    for (const auto& row : r.rows) {
        if (row.scheme != scheme || row.snr_db != snr_db) continue;
        if (is_iterative(scheme) && row.iterations != iterations) continue;
        bits += row.bits;
        errs += row.bit_errors;
    }
    return bits ? static_cast<double>(errs) / static_cast<double>(bits) : 0.0;
}

} // namespace rkmimo::sim
