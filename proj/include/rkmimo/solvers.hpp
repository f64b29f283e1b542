#pragma once

// Randomized Kaczmarz receivers approximating RZF detection. All four share
// kaczmarz_step and differ only in how the next equation is chosen:
//
//   nRK  energy-proportional draw with replacement
//   RK   energy-proportional draw without replacement inside sweeps of K
//   GRK  greedy draw restricted to equations with large residuals
//   RSK  largest residual among omega uniformly drawn equations

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "rkmimo/flops.hpp"
#include "rkmimo/sle.hpp"

namespace rkmimo {

struct SolverConfig {
    Scheme scheme = Scheme::RK;
    /// Iteration budget T, the stopping criterion.
    std::size_t max_iterations = 0;
    /// RSK working-set size; defaults to ceil(log2 K).
    std::optional<Index> omega;
    std::uint64_t seed = 0;
    /// Use column supports in the inner products when the system has them.
    bool sparse_kernels = true;
    /// Ascending iteration counts at which a copy of v is recorded.
    std::vector<std::size_t> checkpoints;
};

struct SolverResult {
    SoftEstimate estimate;
    std::size_t iterations_run = 0;
    std::vector<Index> selection_trace;
    std::vector<cplx> gamma_trace;
    /// Closed-form cost at iterations_run.
    flops::count_t flops_model = 0;
    /// 8 FLOPs per complex multiply-accumulate actually executed by the
    /// column kernels during the run (R_yy included for GRK).
    std::uint64_t flops_effective = 0;
    /// One estimate per checkpoint, with the iterations run and the
    /// effective FLOPs spent when it was taken.
    std::vector<ComplexVector> snapshots;
    std::vector<std::size_t> snapshot_iterations;
    std::vector<std::uint64_t> snapshot_flops_effective;
    /// GRK stopped because the residual vanished.
    bool converged_early = false;
};

/// ceil(log2 K), at least 1.
inline Index default_omega(Index K) {
    if (K <= 1) return 1;
    return static_cast<Index>(std::bit_width(K - 1));
}

/// p_k = e_k / F
inline std::vector<double> energy_probabilities(const SleSystem& sle) {
    std::vector<double> p(sle.users());
    for (Index k = 0; k < p.size(); ++k) p[k] = sle.energies[k] / sle.total_energy;
    return p;
}

//------------------------------------------------------------------------------
// GRK selection rule
//------------------------------------------------------------------------------

inline std::vector<double> squared_residuals(std::span<const cplx> r) {
    std::vector<double> sar(r.size());
    for (Index k = 0; k < r.size(); ++k) sar[k] = std::norm(r[k]);
    return sar;
}

/// epsilon = 1/2 ( max_j SAR_j / (RSS e_j) + 1/F ). Returns nullopt when the
/// residual sum of squares is zero (the system is solved).
inline std::optional<double> grk_epsilon(std::span<const cplx> r, const SleSystem& sle) {
    if (r.size() != sle.users()) throw DimensionError("grk_epsilon: residual length mismatch");
    const auto sar = squared_residuals(r);
    const double rss = std::accumulate(sar.begin(), sar.end(), 0.0);
    if (!(rss > 0.0)) return std::nullopt;
    double best = 0.0;
    for (Index j = 0; j < sar.size(); ++j) best = std::max(best, sar[j] / sle.energies[j]);
    return 0.5 * (best / rss + 1.0 / sle.total_energy);
}

/// U = { k : SAR_k >= epsilon RSS e_k }.
inline std::vector<Index> grk_working_set(std::span<const cplx> r, const SleSystem& sle, double epsilon) {
    const auto sar = squared_residuals(r);
    const double rss = std::accumulate(sar.begin(), sar.end(), 0.0);
    std::vector<Index> set;
    Index argmax = 0;
    for (Index k = 0; k < sar.size(); ++k) {
        if (sar[k] >= epsilon * rss * sle.energies[k]) set.push_back(k);
        if (sar[k] / sle.energies[k] > sar[argmax] / sle.energies[argmax]) argmax = k;
    }
    // epsilon never exceeds the largest normalized residual, so the argmax
    // belongs to U; rounding in the product above can hide it at equality.
    if (!std::binary_search(set.begin(), set.end(), argmax)) set.insert(std::lower_bound(set.begin(), set.end(), argmax), argmax);
    return set;
}

/// p_k = SAR_k / sum_{j in U} SAR_j on U, zero elsewhere.
inline std::vector<double> grk_probabilities(std::span<const cplx> r, std::span<const Index> working_set) {
    if (working_set.empty()) throw SelectionError("grk_probabilities: empty working set");
    std::vector<double> p(r.size(), 0.0);
    double mass = 0.0;
    for (Index k : working_set) mass += std::norm(r[k]);
    if (!(mass > 0.0)) throw ProbabilityError("grk_probabilities: working set carries no residual");
    for (Index k : working_set) p[k] = std::norm(r[k]) / mass;
    return p;
}

//------------------------------------------------------------------------------
// Drivers
//------------------------------------------------------------------------------

namespace detail {

class Recorder {
public:
    Recorder(const SolverConfig& cfg, SolverResult& res, const KernelContext& ctx) : cfg_{cfg}, res_{res}, ctx_{ctx} {
        if (!std::is_sorted(cfg.checkpoints.begin(), cfg.checkpoints.end()))
            throw ConfigError("solver checkpoints must be ascending");
    }

    void at(std::size_t t, const ComplexVector& v) {
        while (next_ < cfg_.checkpoints.size() && cfg_.checkpoints[next_] <= t) take(t, v);
    }

    void finish(std::size_t t, const ComplexVector& v) {
        while (next_ < cfg_.checkpoints.size()) take(t, v);
    }

private:
    void take(std::size_t t, const ComplexVector& v) {
        res_.snapshots.push_back(v);
        res_.snapshot_iterations.push_back(t);
        res_.snapshot_flops_effective.push_back(8 * ctx_.macs);
        ++next_;
    }


    const SolverConfig& cfg_;
    SolverResult& res_;
    const KernelContext& ctx_;
    std::size_t next_ = 0;
};

inline SolverResult finalize(SolverResult&& out, Recorder& rec, KaczmarzState&& s, const SleSystem& sle,
                             Scheme scheme, const KernelContext& ctx, Index omega = 0) {
    rec.finish(s.iterations(), s.v);
    out.iterations_run = s.iterations();
    out.selection_trace = std::move(s.selection_trace);
    out.gamma_trace = std::move(s.gamma_trace);
    out.estimate = {std::move(s.v), scheme};
    out.flops_model = flops::flops_formula({scheme, static_cast<flops::count_t>(sle.antennas()),
                                            static_cast<flops::count_t>(sle.users()),
                                            static_cast<flops::count_t>(out.iterations_run),
                                            static_cast<flops::count_t>(omega)});
    out.flops_effective = 8 * ctx.macs;
    return std::move(out);
}

} // namespace detail

/// Plain randomized Kaczmarz: i.i.d. draws from the energy probabilities.
inline SolverResult run_nrk(const SleSystem& sle, const SolverConfig& cfg) {
    SolverResult res;
    KernelContext ctx{cfg.sparse_kernels, 0};
    detail::Recorder rec(cfg, res, ctx);
    SeededRng rng(cfg.seed);
    KaczmarzState s = KaczmarzState::zero(sle);
    const auto p = energy_probabilities(sle);
    rec.at(0, s.v);
    for (std::size_t t = 0; t < cfg.max_iterations; ++t) {
        const Index i = sample_weighted(p, rng);
        kaczmarz_step(s, sle, i, ctx);
        rec.at(t + 1, s.v);
    }
    auto out = detail::finalize(std::move(res), rec, std::move(s), sle, Scheme::nRK, ctx);
    return out;
}

/// Randomized Kaczmarz with sampling without replacement: the energy
/// probabilities are re-scaled over the equations not yet drawn in the
/// current sweep; the pool refills after K draws.
inline SolverResult run_rk_swor(const SleSystem& sle, const SolverConfig& cfg) {
    SolverResult res;
    KernelContext ctx{cfg.sparse_kernels, 0};
    detail::Recorder rec(cfg, res, ctx);
    SeededRng rng(cfg.seed);
    KaczmarzState s = KaczmarzState::zero(sle);
    const auto p = energy_probabilities(sle);
    std::vector<double> pool = p;
    Index remaining = sle.users();
    rec.at(0, s.v);
    for (std::size_t t = 0; t < cfg.max_iterations; ++t) {
        const Index i = sample_weighted(pool, rng);
        pool[i] = 0.0;
        if (--remaining == 0) {
            pool = p;
            remaining = sle.users();
        }
        kaczmarz_step(s, sle, i, ctx);
        rec.at(t + 1, s.v);
    }
    auto out = detail::finalize(std::move(res), rec, std::move(s), sle, Scheme::RK, ctx);
    return out;
}

/// Greedy randomized Kaczmarz with the residual vector maintained through
/// r <- r - gamma [R_yy]_{:,i}. Stops early once RSS <= 1e-24 ||b||^2.
inline SolverResult run_grk(const SleSystem& sle, const SolverConfig& cfg) {
    SolverResult res;
    KernelContext ctx{cfg.sparse_kernels, 0};
    detail::Recorder rec(cfg, res, ctx);
    SeededRng rng(cfg.seed);

    std::optional<SleSystem> owned;
    if (!sle.gram) owned = with_gram(sle, &ctx);
    const SleSystem& sys = owned ? *owned : sle;

    KaczmarzState s = KaczmarzState::zero(sys);
    s.residual = sys.b;
    const double floor = 1e-24 * squared_norm(sys.b);
    bool early = false;
    rec.at(0, s.v);
    for (std::size_t t = 0; t < cfg.max_iterations; ++t) {
        const ComplexVector& r = *s.residual;
        const double rss = squared_norm(r);
        if (rss <= floor) {
            early = true;
            break;
        }
        const auto epsilon = grk_epsilon(r, sys);
        if (!epsilon) {
            early = true;
            break;
        }
        const auto working = grk_working_set(r, sys, *epsilon);
        const auto p = grk_probabilities(r, working);
        const Index i = sample_categorical(p, rng);
        const cplx gamma = kaczmarz_step(s, sys, i, ctx);
        residual_recursive_update(*s.residual, gamma, i, sys);
        rec.at(t + 1, s.v);
    }
    auto out = detail::finalize(std::move(res), rec, std::move(s), sys, Scheme::GRK, ctx);
    out.converged_early = early;
    return out;
}

/// Randomized sampling Kaczmarz: draw omega distinct equations uniformly,
/// evaluate only their residuals, project onto the one with the largest
/// relative residual (ties to the lowest index).
inline SolverResult run_rsk(const SleSystem& sle, const SolverConfig& cfg) {
    const Index K = sle.users();
    const Index omega = cfg.omega.value_or(default_omega(K));
    if (omega < 1 || omega > K) throw ConfigError("run_rsk: omega must lie in [1, K]");

    SolverResult res;
    KernelContext ctx{cfg.sparse_kernels, 0};
    detail::Recorder rec(cfg, res, ctx);
    SeededRng rng(cfg.seed);
    KaczmarzState s = KaczmarzState::zero(sle);
    std::vector<Index> order(K);
    std::iota(order.begin(), order.end(), Index{0});
    const double inv_total = 1.0 / sle.total_energy;
    rec.at(0, s.v);
    for (std::size_t t = 0; t < cfg.max_iterations; ++t) {
        // Partial Fisher-Yates: order[0, omega) becomes a uniform omega-subset.
        for (Index j = 0; j < omega; ++j) std::swap(order[j], order[j + rng.uniform_index(K - j)]);
        Index best = K;
        double best_rr = -1.0;
        for (Index j = 0; j < omega; ++j) {
            const Index k = order[j];
            const double rr = std::norm(equation_residual(s, sle, k, ctx)) * inv_total;
            if (rr > best_rr || (rr == best_rr && k < best)) {
                best_rr = rr;
                best = k;
            }
        }
        kaczmarz_step(s, sle, best, ctx);
        rec.at(t + 1, s.v);
    }
    auto out = detail::finalize(std::move(res), rec, std::move(s), sle, Scheme::RSK, ctx, omega);
    return out;
}

/// Dispatches to the iterative scheme named in the configuration.
inline SolverResult run_solver(const SleSystem& sle, const SolverConfig& cfg) {
    switch (cfg.scheme) {
    case Scheme::nRK: return run_nrk(sle, cfg);
    case Scheme::RK: return run_rk_swor(sle, cfg);
    case Scheme::GRK: return run_grk(sle, cfg);
    case Scheme::RSK: return run_rsk(sle, cfg);
    default: throw ConfigError("run_solver: " + to_string(cfg.scheme) + " is not an iterative scheme");
    }
}

} // namespace rkmimo
