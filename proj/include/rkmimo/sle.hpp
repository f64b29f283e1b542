#pragma once

// The consistent fat system  B^H z = b = H^H y  with  B = [H; sqrt(xi) I]  and
// z = [u; sqrt(xi) v], together with the MR and exact RZF baselines and the
// Kaczmarz projection step shared by every iterative receiver.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rkmimo/core_math.hpp"

namespace rkmimo {

/// Counts complex multiply-accumulates executed by the column kernels.
struct KernelContext {
    /// Visit only supported rows when the system carries a support.
    bool sparse = true;
    std::uint64_t macs = 0;
};

struct SleSystem {
    ComplexMatrix H;
    std::optional<SparsitySupport> support;
    ComplexVector b;
    double xi = 0.0;
    /// e_k = ||h_k||^2 + xi
    std::vector<double> energies;
    /// F = ||H||_F^2 + K xi = sum_k e_k
    double total_energy = 0.0;
    /// R_yy = H^H H + xi I, present only when requested.
    std::optional<ComplexMatrix> gram;

    Index antennas() const noexcept { return H.rows(); }
    Index users() const noexcept { return H.cols(); }

    /// Row list used by the kernels for column k, or nullopt for dense access.
    std::optional<std::span<const Index>> rows_of(Index k, const KernelContext& ctx) const {
        if (!ctx.sparse || !support) return std::nullopt;
        return std::span<const Index>(support->columns[k]);
    }

    Index touched(Index k, const KernelContext& ctx) const {
        return ctx.sparse && support ? support->columns[k].size() : H.rows();
    }
};

/// Computes H^H H + xi I, visiting only the overlap of column supports on the
/// sparse path.
inline ComplexMatrix regularized_gram(const SleSystem& sle, KernelContext& ctx) {
    const Index K = sle.users();
    ComplexMatrix R(K, K);
    for (Index j = 0; j < K; ++j) {
        for (Index i = 0; i <= j; ++i) {
            cplx g{0.0, 0.0};
            if (ctx.sparse && sle.support) {
                const auto& si = sle.support->columns[i];
                const auto& sj = sle.support->columns[j];
                auto hi = sle.H.col(i);
                auto hj = sle.H.col(j);
                Index a = 0, c = 0;
                while (a < si.size() && c < sj.size()) {
                    if (si[a] < sj[c]) {
                        ++a;
                    } else if (sj[c] < si[a]) {
                        ++c;
                    } else {
                        g += std::conj(hi[si[a]]) * hj[si[a]];
                        ++ctx.macs;
                        ++a;
                        ++c;
                    }
                }
            } else {
                g = hermitian_dot(sle.H.col(i), sle.H.col(j));
                ctx.macs += sle.antennas();
            }
            if (i == j) g = cplx{g.real() + sle.xi, 0.0};
            R(i, j) = g;
            R(j, i) = std::conj(g);
        }
    }
    return R;
}

/// Builds the consistent system for (H, y, xi). The support, when given, must
/// cover every nonzero of H.
inline SleSystem assemble_sle(ComplexMatrix H, std::span<const cplx> y, double xi,
                              std::optional<SparsitySupport> support = std::nullopt,
                              bool with_gram = false, KernelContext* ctx = nullptr) {
    if (!(xi > 0.0)) throw RegularizerError("assemble_sle: regularizer xi must be positive");
    if (y.size() != H.rows()) throw DimensionError("assemble_sle: y length must equal the antenna count");
    if (support && (support->rows != H.rows() || support->columns.size() != H.cols() || !support->is_well_formed()))
        throw DimensionError("assemble_sle: malformed support");

    KernelContext local;
    KernelContext& c = ctx ? *ctx : local;

    SleSystem sle;
    sle.H = std::move(H);
    sle.support = std::move(support);
    sle.xi = xi;
    const Index K = sle.users();
    sle.b.resize(K);
    sle.energies.resize(K);
    for (Index k = 0; k < K; ++k) {
        const auto rows = sle.rows_of(k, c);
        const auto h = sle.H.col(k);
        sle.b[k] = hermitian_dot(h, y, rows);
        sle.energies[k] = hermitian_dot(h, h, rows).real() + xi;
        c.macs += 2 * sle.touched(k, c);
    }
    for (double e : sle.energies) sle.total_energy += e;
    if (with_gram) sle.gram = regularized_gram(sle, c);
    return sle;
}

/// Copy of `sle` carrying R_yy.
inline SleSystem with_gram(SleSystem sle, KernelContext* ctx = nullptr) {
    KernelContext local;
    if (!sle.gram) sle.gram = regularized_gram(sle, ctx ? *ctx : local);
    return sle;
}

enum class Scheme { MR, RZF, nRK, RK, GRK, RSK, TPE };

inline std::string to_string(Scheme s) {
    switch (s) {
    case Scheme::MR: return "MR";
    case Scheme::RZF: return "RZF";
    case Scheme::nRK: return "nRK";
    case Scheme::RK: return "RK";
    case Scheme::GRK: return "GRK";
    case Scheme::RSK: return "RSK";
    case Scheme::TPE: return "TPE";
    }
    return "?";
}

inline Scheme scheme_from_string(const std::string& s) {
    for (Scheme v : {Scheme::MR, Scheme::RZF, Scheme::nRK, Scheme::RK, Scheme::GRK, Scheme::RSK, Scheme::TPE})
        if (to_string(v) == s) return v;
    throw ModelError("unknown scheme '" + s + "'");
}

struct SoftEstimate {
    ComplexVector values;
    Scheme scheme = Scheme::MR;
};

/// Matched filter H^H y, which is exactly the constant-term vector b.
inline SoftEstimate mr_estimate(const SleSystem& sle) { return {sle.b, Scheme::MR}; }

/// (H^H H + xi I)^{-1} H^H y by Cholesky; the reference for every iterative scheme.
inline SoftEstimate rzf_exact(const ComplexMatrix& H, std::span<const cplx> y, double xi) {
    if (!(xi > 0.0)) throw RegularizerError("rzf_exact: regularizer xi must be positive");
    ComplexMatrix R = gram(H);
    for (Index k = 0; k < R.rows(); ++k) R(k, k) += xi;
    return {solve_hpd(R, adjoint_matvec(H, y)), Scheme::RZF};
}

inline SoftEstimate rzf_exact(const SleSystem& sle) {
    if (sle.gram) return {solve_hpd(*sle.gram, sle.b), Scheme::RZF};
    ComplexMatrix R = gram(sle.H);
    for (Index k = 0; k < R.rows(); ++k) R(k, k) += sle.xi;
    return {solve_hpd(R, sle.b), Scheme::RZF};
}

//------------------------------------------------------------------------------
// Kaczmarz iteration
//------------------------------------------------------------------------------

struct KaczmarzState {
    ComplexVector u;
    ComplexVector v;
    std::optional<ComplexVector> residual;
    std::vector<Index> selection_trace;
    std::vector<cplx> gamma_trace;

    std::size_t iterations() const noexcept { return selection_trace.size(); }

    static KaczmarzState zero(const SleSystem& sle) {
        return {ComplexVector(sle.antennas()), ComplexVector(sle.users()), std::nullopt, {}, {}};
    }
};

/// r_k = b_k - h_k^H u - xi v_k
inline cplx equation_residual(const KaczmarzState& s, const SleSystem& sle, Index k, KernelContext& ctx) {
    const cplx hu = hermitian_dot(sle.H.col(k), s.u, sle.rows_of(k, ctx));
    ctx.macs += sle.touched(k, ctx);
    return sle.b[k] - hu - sle.xi * s.v[k];
}

/// Projects the iterate onto the hyperplane of equation i and returns the step
/// gamma = r_i / e_i. The residual field is left for the caller to maintain.
inline cplx kaczmarz_step(KaczmarzState& s, const SleSystem& sle, Index i, KernelContext& ctx) {
    if (i >= sle.users()) throw SelectionError("kaczmarz_step: equation index out of range");
    if (s.u.size() != sle.antennas() || s.v.size() != sle.users())
        throw DimensionError("kaczmarz_step: state does not match system");
    const cplx r = equation_residual(s, sle, i, ctx);
    const cplx gamma = r / sle.energies[i];
    axpy(gamma, sle.H.col(i), s.u, sle.rows_of(i, ctx));
    ctx.macs += sle.touched(i, ctx);
    s.v[i] += gamma;
    s.selection_trace.push_back(i);
    s.gamma_trace.push_back(gamma);
    return gamma;
}

inline cplx kaczmarz_step(KaczmarzState& s, const SleSystem& sle, Index i) {
    KernelContext ctx;
    return kaczmarz_step(s, sle, i, ctx);
}

/// Residual of every equation, recomputed from the iterate.
inline ComplexVector residual_direct(const KaczmarzState& s, const SleSystem& sle) {
    KernelContext ctx;
    ComplexVector r(sle.users());
    for (Index k = 0; k < sle.users(); ++k) r[k] = equation_residual(s, sle, k, ctx);
    return r;
}

/// r <- r - gamma [R_yy]_{:,i}
inline void residual_recursive_update(ComplexVector& r, cplx gamma, Index i, const SleSystem& sle) {
    if (!sle.gram) throw StateError("residual_recursive_update: system has no R_yy");
    if (i >= sle.users() || r.size() != sle.users()) throw SelectionError("residual_recursive_update: index or length mismatch");
    const auto column = sle.gram->col(i);
    for (Index k = 0; k < r.size(); ++k) r[k] -= gamma * column[k];
}

/// Residual of equation k after the recorded history, written as the matched
/// filter output minus interference and self terms:
///   r_k = h_k^H y - sum_t gamma_t * (h_k^H h_{i_t}        if i_t != k
///                                   ||h_k||^2 + xi        if i_t == k)
/// Independent of the iterate; used to cross-check the other residual routes.
inline cplx residual_expansion_oracle(const SleSystem& sle, std::span<const Index> selections,
                                      std::span<const cplx> gammas, Index k) {
    if (selections.size() != gammas.size()) throw TraceError("residual_expansion_oracle: incomplete history");
    if (k >= sle.users()) throw SelectionError("residual_expansion_oracle: index out of range");
    cplx r = sle.b[k];
    for (Index t = 0; t < selections.size(); ++t) {
        const Index i = selections[t];
        if (i >= sle.users()) throw TraceError("residual_expansion_oracle: history index out of range");
        const cplx coupling = i != k ? hermitian_dot(sle.H.col(k), sle.H.col(i)) : cplx{sle.energies[k], 0.0};
        r -= gammas[t] * coupling;
    }
    return r;
}

} // namespace rkmimo
