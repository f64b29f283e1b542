#pragma once

// Dense complex kernels, seeded randomness and categorical sampling shared by
// every other part of the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rkmimo/errors.hpp"

namespace rkmimo {

using cplx = std::complex<double>;
using ComplexVector = std::vector<cplx>;
using Index = std::size_t;

/// Sorted row indices of one column that may hold nonzeros.
using SupportColumn = std::vector<Index>;

//------------------------------------------------------------------------------
// ComplexMatrix
//------------------------------------------------------------------------------

/// Dense column-major complex matrix with fixed dimensions.
class ComplexMatrix {
public:
    ComplexMatrix() = default;

    ComplexMatrix(Index rows, Index cols)
        : rows_{rows}, cols_{cols}, data_(rows * cols, cplx{0.0, 0.0}) {}

    static ComplexMatrix identity(Index n) {
        ComplexMatrix I(n, n);
        for (Index i = 0; i < n; ++i) I(i, i) = 1.0;
        return I;
    }

    /// Row-major initializer, convenient in tests.
    static ComplexMatrix from_rows(std::initializer_list<std::initializer_list<cplx>> rows) {
        const Index r = rows.size();
        const Index c = r == 0 ? 0 : rows.begin()->size();
        ComplexMatrix A(r, c);
        Index i = 0;
        for (const auto& row : rows) {
            if (row.size() != c) throw DimensionError("from_rows: ragged initializer");
            Index j = 0;
            for (const auto& v : row) A(i, j++) = v;
            ++i;
        }
        return A;
    }

    Index rows() const noexcept { return rows_; }
    Index cols() const noexcept { return cols_; }

    cplx& operator()(Index r, Index c) noexcept { return data_[c * rows_ + r]; }
    const cplx& operator()(Index r, Index c) const noexcept { return data_[c * rows_ + r]; }

    std::span<cplx> col(Index c) noexcept { return {data_.data() + c * rows_, rows_}; }
    std::span<const cplx> col(Index c) const noexcept { return {data_.data() + c * rows_, rows_}; }

    std::span<const cplx> data() const noexcept { return data_; }

    bool operator==(const ComplexMatrix&) const = default;

private:
    Index rows_ = 0;
    Index cols_ = 0;
    std::vector<cplx> data_;
};

//------------------------------------------------------------------------------
// SparsitySupport
//------------------------------------------------------------------------------

/// Per-column list of structurally nonzero rows.
struct SparsitySupport {
    Index rows = 0;
    std::vector<SupportColumn> columns;

    static SparsitySupport full(Index rows, Index cols) {
        SparsitySupport s{rows, std::vector<SupportColumn>(cols)};
        for (auto& c : s.columns) {
            c.resize(rows);
            for (Index m = 0; m < rows; ++m) c[m] = m;
        }
        return s;
    }

    /// Indices strictly increasing and inside [0, rows).
    bool is_well_formed() const {
        for (const auto& c : columns) {
            for (Index j = 0; j < c.size(); ++j) {
                if (c[j] >= rows) return false;
                if (j > 0 && c[j] <= c[j - 1]) return false;
            }
        }
        return true;
    }

    /// Every nonzero of `H` lies inside the declared support.
    bool covers(const ComplexMatrix& H) const {
        if (H.rows() != rows || H.cols() != columns.size()) return false;
        for (Index k = 0; k < H.cols(); ++k) {
            const auto& c = columns[k];
            Index j = 0;
            for (Index m = 0; m < rows; ++m) {
                while (j < c.size() && c[j] < m) ++j;
                const bool listed = j < c.size() && c[j] == m;
                if (!listed && std::abs(H(m, k)) > 0.0) return false;
            }
        }
        return true;
    }
};

//------------------------------------------------------------------------------
// Kernels
//------------------------------------------------------------------------------

/// sum_m conj(a_m) * b_m. With a support list only the listed indices are
/// visited; the caller guarantees that `a` vanishes elsewhere.
inline cplx hermitian_dot(std::span<const cplx> a, std::span<const cplx> b,
                          std::optional<std::span<const Index>> support = std::nullopt) {
    if (a.size() != b.size()) throw DimensionError("hermitian_dot: length mismatch");
    cplx acc{0.0, 0.0};
    if (support) {
        for (Index m : *support) {
            if (m >= a.size()) throw DimensionError("hermitian_dot: support index out of range");
            acc += std::conj(a[m]) * b[m];
        }
    } else {
        for (Index m = 0; m < a.size(); ++m) acc += std::conj(a[m]) * b[m];
    }
    return acc;
}

/// y += alpha * x, restricted to `support` when given.
inline void axpy(cplx alpha, std::span<const cplx> x, std::span<cplx> y,
                 std::optional<std::span<const Index>> support = std::nullopt) {
    if (x.size() != y.size()) throw DimensionError("axpy: length mismatch");
    if (support) {
        for (Index m : *support) y[m] += alpha * x[m];
    } else {
        for (Index m = 0; m < x.size(); ++m) y[m] += alpha * x[m];
    }
}

inline double squared_norm(std::span<const cplx> a) {
    double s = 0.0;
    for (const auto& z : a) s += std::norm(z);
    return s;
}

inline double norm2(std::span<const cplx> a) { return std::sqrt(squared_norm(a)); }

/// ||a - b||_2
inline double distance(std::span<const cplx> a, std::span<const cplx> b) {
    if (a.size() != b.size()) throw DimensionError("distance: length mismatch");
    double s = 0.0;
    for (Index i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
    return std::sqrt(s);
}

/// ||a - ref|| / ||ref||, or the absolute error when ref is zero.
inline double relative_error(std::span<const cplx> a, std::span<const cplx> ref) {
    const double d = distance(a, ref);
    const double n = norm2(ref);
    return n > 0.0 ? d / n : d;
}

inline ComplexVector matvec(const ComplexMatrix& A, std::span<const cplx> x) {
    if (A.cols() != x.size()) throw DimensionError("matvec: dimension mismatch");
    ComplexVector y(A.rows(), cplx{0.0, 0.0});
    for (Index c = 0; c < A.cols(); ++c) axpy(x[c], A.col(c), y);
    return y;
}

/// A^H x
inline ComplexVector adjoint_matvec(const ComplexMatrix& A, std::span<const cplx> x) {
    if (A.rows() != x.size()) throw DimensionError("adjoint_matvec: dimension mismatch");
    ComplexVector y(A.cols());
    for (Index c = 0; c < A.cols(); ++c) y[c] = hermitian_dot(A.col(c), x);
    return y;
}

/// A^H A
inline ComplexMatrix gram(const ComplexMatrix& A) {
    ComplexMatrix G(A.cols(), A.cols());
    for (Index j = 0; j < A.cols(); ++j) {
        for (Index i = 0; i <= j; ++i) {
            G(i, j) = hermitian_dot(A.col(i), A.col(j));
            G(j, i) = std::conj(G(i, j));
        }
    }
    return G;
}

/// Lower-triangular L with A = L L^H. Only the lower triangle of A is read.
inline ComplexMatrix cholesky_factor(const ComplexMatrix& A) {
    const Index n = A.rows();
    if (A.cols() != n) throw DimensionError("cholesky_factor: matrix not square");
    ComplexMatrix L(n, n);
    for (Index j = 0; j < n; ++j) {
        double d = A(j, j).real();
        for (Index p = 0; p < j; ++p) d -= std::norm(L(j, p));
        if (!(d > 0.0)) throw FactorizationError("cholesky_factor: non-positive pivot at column " + std::to_string(j));
        const double ljj = std::sqrt(d);
        L(j, j) = ljj;
        for (Index i = j + 1; i < n; ++i) {
            cplx s = A(i, j);
            for (Index p = 0; p < j; ++p) s -= L(i, p) * std::conj(L(j, p));
            L(i, j) = s / ljj;
        }
    }
    return L;
}

/// Solves A x = b for Hermitian positive definite A by Cholesky factorization.
inline ComplexVector solve_hpd(const ComplexMatrix& A, std::span<const cplx> b) {
    const Index n = A.rows();
    if (n == 0 || A.cols() != n) throw DimensionError("solve_hpd: matrix must be square with K >= 1");
    if (b.size() != n) throw DimensionError("solve_hpd: right-hand side length mismatch");

    double scale = 0.0, asym = 0.0;
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i) {
            scale = std::max(scale, std::abs(A(i, j)));
            asym = std::max(asym, std::abs(A(i, j) - std::conj(A(j, i))));
        }
    if (asym > 1e-10 * scale) throw FactorizationError("solve_hpd: matrix is not Hermitian");

    const ComplexMatrix L = cholesky_factor(A);
    ComplexVector x(b.begin(), b.end());
    for (Index i = 0; i < n; ++i) {
        for (Index p = 0; p < i; ++p) x[i] -= L(i, p) * x[p];
        x[i] /= L(i, i);
    }
    for (Index i = n; i-- > 0;) {
        for (Index p = i + 1; p < n; ++p) x[i] -= std::conj(L(p, i)) * x[p];
        x[i] /= L(i, i);
    }
    return x;
}

//------------------------------------------------------------------------------
// SeededRng
//------------------------------------------------------------------------------

/// SplitMix64 finalizer, used to derive independent child seeds.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic random stream: 64-bit Mersenne Twister (whose output sequence
/// is fixed by the C++ standard) with library-defined conversions to uniform,
/// integer and Gaussian variates, so draws do not depend on the standard
/// library's distribution implementations.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : seed_{seed}, engine_{seed} {}

    /// Seed for an independent stream identified by (seed, a, b).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) noexcept {
        return mix64(mix64(seed ^ mix64(a)) ^ mix64(b + 0x632be59bd9b4e019ULL));
    }

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [0, n), unbiased by rejection.
    Index uniform_index(Index n) {
        if (n == 0) throw DomainError("uniform_index: empty range");
        const std::uint64_t range = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % range;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<Index>(x % range);
    }

    /// CN(0, 1): real and imaginary parts each N(0, 1/2).
    cplx complex_normal() {
        const double radius = std::sqrt(-std::log(1.0 - uniform()));
        const double angle = 2.0 * std::numbers::pi * uniform();
        return {radius * std::cos(angle), radius * std::sin(angle)};
    }

    bool bit() { return (engine_() >> 63) != 0; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

inline ComplexVector sample_complex_gaussian(Index n, SeededRng& rng) {
    if (n == 0) throw DimensionError("sample_complex_gaussian: n must be >= 1");
    ComplexVector z(n);
    for (auto& v : z) v = rng.complex_normal();
    return z;
}

//------------------------------------------------------------------------------
// Categorical sampling
//------------------------------------------------------------------------------

/// Inverse-CDF draw from nonnegative, not necessarily normalized weights. The
/// cumulative sum runs in ascending index order; zero-weight entries are never
/// returned.
inline Index sample_weighted(std::span<const double> weights, SeededRng& rng) {
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw ProbabilityError("sample_weighted: negative or NaN weight");
        total += w;
    }
    if (!(total > 0.0)) throw ProbabilityError("sample_weighted: zero total mass");

    const double target = rng.uniform() * total;
    double cum = 0.0;
    Index last_positive = 0;
    for (Index k = 0; k < weights.size(); ++k) {
        if (weights[k] <= 0.0) continue;
        cum += weights[k];
        last_positive = k;
        if (target < cum) return k;
    }
    // Rounding can leave target marginally above the final partial sum.
    return last_positive;
}

/// Draws index k with probability p_k. `p` must be a probability vector.
inline Index sample_categorical(std::span<const double> p, SeededRng& rng) {
    double total = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw ProbabilityError("sample_categorical: negative or NaN probability");
        total += v;
    }
    if (!(total > 0.0)) throw ProbabilityError("sample_categorical: zero total mass");
    if (std::abs(total - 1.0) > 1e-12) throw ProbabilityError("sample_categorical: probabilities do not sum to 1");
    return sample_weighted(p, rng);
}

} // namespace rkmimo
