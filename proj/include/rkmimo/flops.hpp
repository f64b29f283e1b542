#pragma once

// Closed-form FLOP counts of every receiver (complex multiply = 6 FLOPs,
// complex add = 2 FLOPs), evaluated exactly in integer arithmetic.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rkmimo/sle.hpp"

namespace rkmimo::flops {

using count_t = std::int64_t;

struct FlopModel {
    Scheme scheme = Scheme::MR;
    count_t M = 0;
    count_t K = 0;
    count_t T = 0;
    /// Working-set size; only read for RSK.
    count_t omega = 0;
};

inline count_t flops_formula(const FlopModel& f) {
    if (f.M < 0 || f.K < 0 || f.T < 0 || f.omega < 0) throw ModelError("flops_formula: parameters must be nonnegative");
    const count_t M = f.M, K = f.K, T = f.T, w = f.omega;
    switch (f.scheme) {
    case Scheme::MR: return 8 * K * M - 2 * K;
    case Scheme::RZF: return 4 * K * K * M + 12 * K * M + 5 * K * K * K + 10 * K * K - 4 * K;
    case Scheme::nRK: return 16 * K * M - K - 1 + (16 * M + 8) * T;
    case Scheme::RK: return 16 * K * M - 2 * K - 1 + (K + 16 * M + 8) * T;
    case Scheme::GRK: return 4 * K * K * M + 12 * K * M - K * K - K + (16 * K + 8 * M + 7) * T;
    case Scheme::RSK: return 16 * K * M - 2 * K + (w * (8 * M + 9) + 8 * M + 4) * T;
    case Scheme::TPE: return 4 * K * K * M + 12 * K * M + 3 * K + 4 + (8 * K * K + 4 * K) * T;
    }
    throw ModelError("flops_formula: unknown scheme");
}

/// Percentage of the RZF cost saved by `scheme`: 100 (1 - flops / flops_RZF).
inline double relaxation_ratio(Scheme scheme, count_t M, count_t K, count_t T, count_t omega) {
    const auto rzf = flops_formula({Scheme::RZF, M, K, T, omega});
    const auto own = flops_formula({scheme, M, K, T, omega});
    if (rzf == 0) throw ModelError("relaxation_ratio: RZF cost is zero");
    return 100.0 * (1.0 - static_cast<double>(own) / static_cast<double>(rzf));
}

/// Schemes in table order.
inline const std::vector<Scheme>& table_schemes() {
    static const std::vector<Scheme> order{Scheme::MR, Scheme::RZF, Scheme::nRK, Scheme::RK,
                                           Scheme::GRK, Scheme::RSK, Scheme::TPE};
    return order;
}

/// Published reference values for the two standard configurations
/// (M, K, T, omega) = (64, 8, 12, 3) and (256, 32, 64, 5). Two cells of the
/// first configuration disagree with their own closed form: RK lists 20653
/// (formula 20655) and TPE lists 29696 (formula 29084).
inline std::optional<count_t> reference_value(Scheme s, count_t M, count_t K, count_t T, count_t omega) {
    if (M == 64 && K == 8 && T == 12 && omega == 3) {
        switch (s) {
        case Scheme::MR: return 4080;
        case Scheme::RZF: return 25696;
        case Scheme::nRK: return 20567;
        case Scheme::RK: return 20653;
        case Scheme::GRK: return 30220;
        case Scheme::RSK: return 33124;
        case Scheme::TPE: return 29696;
        }
    }
    if (M == 256 && K == 32 && T == 64 && omega == 5) {
        switch (s) {
        case Scheme::MR: return 65472;
        case Scheme::RZF: return 1320832;
        case Scheme::nRK: return 393695;
        case Scheme::RK: return 395711;
        case Scheme::GRK: return 1310112;
        case Scheme::RSK: return 920576;
        case Scheme::TPE: return 1679460;
        }
    }
    return std::nullopt;
}

struct TableRow {
    Scheme scheme;
    count_t flops;
    double relaxation_pct;
    std::optional<count_t> reference;

    /// True when a reference exists and differs from the formula.
    bool erratum() const { return reference && *reference != flops; }
};

inline std::vector<TableRow> flops_table(count_t M, count_t K, count_t T, count_t omega) {
    if (K < 1) throw ModelError("flops_table: K must be >= 1");
    if (M < 0 || T < 0 || omega < 0) throw ModelError("flops_table: parameters must be nonnegative");
    std::vector<TableRow> rows;
    for (Scheme s : table_schemes()) {
        rows.push_back({s, flops_formula({s, M, K, T, omega}), relaxation_ratio(s, M, K, T, omega),
                        reference_value(s, M, K, T, omega)});
    }
    return rows;
}

} // namespace rkmimo::flops
