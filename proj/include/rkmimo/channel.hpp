#pragma once

// User placement, large-scale fading, spatial correlation, visibility regions
// and Rayleigh channel sampling for compact (cell-centred) and extra-large
// (edge-mounted) uniform linear arrays.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "rkmimo/core_math.hpp"

namespace rkmimo::channel {

//------------------------------------------------------------------------------
// Geometry
//------------------------------------------------------------------------------

enum class ArrayLayout {
    /// Compact array at the centre of a square cell.
    Centered,
    /// Uniform linear array occupying one full side of a square cell.
    EdgeArray,
};

struct CellGeometry {
    ArrayLayout layout = ArrayLayout::Centered;
    double side_m = 400.0;
    double min_dist_m = 35.0;
    Index antennas = 64;

    /// Compact 64-antenna array in a 0.4 km x 0.4 km cell, users beyond 35 m.
    static CellGeometry mmimo64() { return {ArrayLayout::Centered, 400.0, 35.0, 64}; }
    /// 256-antenna array along one side of a 0.25 km x 0.25 km cell, users beyond 25 m.
    static CellGeometry xl256() { return {ArrayLayout::EdgeArray, 250.0, 25.0, 256}; }

    double array_length_m() const { return layout == ArrayLayout::EdgeArray ? side_m : 0.0; }

    void validate() const {
        if (!(side_m > 0.0)) throw GeometryError("cell side must be positive");
        if (!(min_dist_m >= 0.0) || !(min_dist_m < side_m))
            throw GeometryError("minimum distance must lie in [0, side)");
        if (antennas == 0) throw GeometryError("antenna count must be >= 1");
    }

    auto key() const { return std::tuple{static_cast<int>(layout), side_m, min_dist_m, antennas}; }
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct UserDrop {
    std::vector<Point> positions;
};

/// Position of antenna m. Centered arrays are treated as co-located at the
/// origin; edge arrays sit on y = 0 at uniform spacing over [0, side].
inline Point antenna_position(const CellGeometry& g, Index m) {
    if (g.layout == ArrayLayout::Centered) return {0.0, 0.0};
    const double spacing = g.side_m / static_cast<double>(g.antennas);
    return {(static_cast<double>(m) + 0.5) * spacing, 0.0};
}

/// Distance from a user to the array: the BS point for centered layouts and
/// the array segment for edge layouts.
inline double distance_to_array(const CellGeometry& g, Point p) {
    if (g.layout == ArrayLayout::Centered) return std::hypot(p.x, p.y);
    const double cx = std::clamp(p.x, 0.0, g.array_length_m());
    return std::hypot(p.x - cx, p.y);
}

inline Point uniform_point(const CellGeometry& g, SeededRng& rng) {
    if (g.layout == ArrayLayout::Centered) {
        const double h = 0.5 * g.side_m;
        const double x = rng.uniform(-h, h);
        const double y = rng.uniform(-h, h);
        return {x, y};
    }
    const double x = rng.uniform(0.0, g.side_m);
    const double y = rng.uniform(0.0, g.side_m);
    return {x, y};
}

inline constexpr std::uint64_t kMaxPlacementAttempts = 1'000'000;

/// K i.i.d. uniform user positions conditioned on the minimum distance to the
/// array, by rejection sampling.
inline UserDrop drop_users(const CellGeometry& g, Index K, SeededRng& rng) {
    g.validate();
    if (K == 0) throw GeometryError("drop_users: K must be >= 1");
    const double farthest = g.layout == ArrayLayout::Centered ? g.side_m / std::sqrt(2.0) : g.side_m;
    if (g.min_dist_m >= farthest) throw GeometryError("drop_users: minimum distance is infeasible for the cell");

    UserDrop drop;
    drop.positions.reserve(K);
    for (Index k = 0; k < K; ++k) {
        std::uint64_t attempts = 0;
        for (;;) {
            if (++attempts > kMaxPlacementAttempts)
                throw GeometryError("drop_users: placement attempts exhausted");
            const Point p = uniform_point(g, rng);
            if (distance_to_array(g, p) >= g.min_dist_m) {
                drop.positions.push_back(p);
                break;
            }
        }
    }
    return drop;
}

//------------------------------------------------------------------------------
// Large-scale fading
//------------------------------------------------------------------------------

/// Urban-micro pathloss gain in dB at distance d (meters).
inline double pathloss_db(double d) {
    if (!(d > 0.0)) throw DomainError("pathloss_db: distance must be positive");
    return -30.5 - 36.7 * std::log10(d);
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// K x M linear large-scale gains; row k holds beta_k^m over antennas.
struct LargeScale {
    Index users = 0;
    Index antennas = 0;
    std::vector<double> beta; // row-major, users x antennas

    double operator()(Index k, Index m) const { return beta[k * antennas + m]; }
    double& operator()(Index k, Index m) { return beta[k * antennas + m]; }
};

namespace detail {

inline double mean_linear_gain(const CellGeometry& g, Point p) {
    if (g.layout == ArrayLayout::Centered) return db_to_linear(pathloss_db(std::max(distance_to_array(g, p), 1e-3)));
    double s = 0.0;
    for (Index m = 0; m < g.antennas; ++m) {
        const Point a = antenna_position(g, m);
        s += db_to_linear(pathloss_db(std::max(std::hypot(p.x - a.x, p.y - a.y), 1e-3)));
    }
    return s / static_cast<double>(g.antennas);
}

} // namespace detail

inline constexpr Index kNormalizationSamples = 100'000;
inline constexpr std::uint64_t kNormalizationSeed = 0x5eedf00dULL;

/// Median over the cell of the antenna-averaged linear pathloss gain, estimated
/// from a fixed-seed Monte-Carlo sample of admissible user positions. Large
/// scale gains are divided by this value so that an SNR of 0 dB refers to the
/// median user. Results are memoized per geometry.
inline double median_cell_gain(const CellGeometry& g) {
    static std::mutex mutex;
    static std::map<decltype(g.key()), double> cache;
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(g.key()); it != cache.end()) return it->second;
    }
    SeededRng rng(kNormalizationSeed);
    std::vector<double> gains;
    gains.reserve(kNormalizationSamples);
    const UserDrop drop = drop_users(g, kNormalizationSamples, rng);
    for (const Point& p : drop.positions) gains.push_back(detail::mean_linear_gain(g, p));
    auto mid = gains.begin() + static_cast<std::ptrdiff_t>(gains.size() / 2);
    std::nth_element(gains.begin(), mid, gains.end());
    const double median = *mid;
    std::lock_guard lock(mutex);
    cache.emplace(g.key(), median);
    return median;
}

/// Linear large-scale gains for a drop, normalized by `reference_gain`
/// (pass 1.0 for raw pathloss). Centered arrays give identical gains across a
/// row; edge arrays use the per-antenna distance.
inline LargeScale large_scale(const CellGeometry& g, const UserDrop& drop, double reference_gain) {
    if (!(reference_gain > 0.0)) throw DomainError("large_scale: reference gain must be positive");
    LargeScale ls{drop.positions.size(), g.antennas, std::vector<double>(drop.positions.size() * g.antennas)};
    for (Index k = 0; k < ls.users; ++k) {
        const Point p = drop.positions[k];
        if (g.layout == ArrayLayout::Centered) {
            const double b = db_to_linear(pathloss_db(distance_to_array(g, p))) / reference_gain;
            for (Index m = 0; m < g.antennas; ++m) ls(k, m) = b;
        } else {
            for (Index m = 0; m < g.antennas; ++m) {
                const Point a = antenna_position(g, m);
                ls(k, m) = db_to_linear(pathloss_db(std::hypot(p.x - a.x, p.y - a.y))) / reference_gain;
            }
        }
    }
    return ls;
}

//------------------------------------------------------------------------------
// Spatial correlation and visibility regions
//------------------------------------------------------------------------------

/// [R]_{i,j} = iota^{|i-j|}
inline ComplexMatrix exp_correlation(Index M, double iota) {
    if (!(iota >= 0.0 && iota < 1.0)) throw DomainError("exp_correlation: iota must lie in [0, 1)");
    ComplexMatrix R(M, M);
    for (Index j = 0; j < M; ++j)
        for (Index i = 0; i < M; ++i) {
            const Index lag = i > j ? i - j : j - i;
            R(i, j) = lag == 0 ? 1.0 : std::pow(iota, static_cast<double>(lag));
        }
    return R;
}

/// Visible antennas of every user (0-based indices).
struct VisibilityMask {
    Index antennas = 0;
    Index nominal_width = 0;
    std::vector<Index> centers;
    std::vector<SupportColumn> regions;

    double scale() const { return static_cast<double>(antennas) / static_cast<double>(nominal_width); }
};

/// Contiguous run of D antennas around `center`, clipped to [0, M). Odd D is
/// symmetric; even D extends one element further on the high side.
inline SupportColumn visibility_region(Index M, Index D, Index center) {
    if (D == 0 || D > M) throw DomainError("visibility_region: require 1 <= D <= M");
    if (center >= M) throw DomainError("visibility_region: center out of range");
    const auto c = static_cast<std::int64_t>(center);
    const auto half = static_cast<std::int64_t>(D / 2);
    const std::int64_t lo = D % 2 == 1 ? c - half : c - half + 1;
    const std::int64_t hi = c + half;
    SupportColumn region;
    for (std::int64_t m = std::max<std::int64_t>(lo, 0); m <= std::min<std::int64_t>(hi, static_cast<std::int64_t>(M) - 1); ++m)
        region.push_back(static_cast<Index>(m));
    return region;
}

inline VisibilityMask build_visibility(Index M, Index D, Index K, SeededRng& rng) {
    if (D == 0 || D > M) throw DomainError("build_visibility: require 1 <= D <= M");
    VisibilityMask mask{M, D, {}, {}};
    mask.centers.reserve(K);
    mask.regions.reserve(K);
    for (Index k = 0; k < K; ++k) {
        const Index c = rng.uniform_index(M);
        mask.centers.push_back(c);
        mask.regions.push_back(visibility_region(M, D, c));
    }
    return mask;
}

//------------------------------------------------------------------------------
// Covariance
//------------------------------------------------------------------------------

/// Per-user covariance Theta_k in factored form.
///
/// Correlated mode: Theta_k = diag(sqrt(beta_k)) R diag(sqrt(beta_k)), sharing
/// one correlation matrix R (and its Cholesky factor) across users.
/// Visibility mode: Theta_k = diag((M/D) beta_k^m on V_k, 0 elsewhere).
class ChannelCovariance {
public:
    enum class Mode { Correlated, Visibility };

    Mode mode() const noexcept { return mode_; }
    Index antennas() const noexcept { return antennas_; }
    Index users() const noexcept { return variances_.size(); }

    /// Per-antenna variances, i.e. diag(Theta_k).
    const std::vector<double>& variances(Index k) const { return variances_.at(k); }
    const SupportColumn& support(Index k) const { return supports_.at(k); }
    bool correlation_is_identity() const noexcept { return identity_; }
    const ComplexMatrix& correlation_factor() const noexcept { return factor_; }

    /// Materialized Theta_k.
    ComplexMatrix theta(Index k) const {
        ComplexMatrix T(antennas_, antennas_);
        const auto& d = variances_.at(k);
        if (mode_ == Mode::Visibility || identity_) {
            for (Index m = 0; m < antennas_; ++m) T(m, m) = d[m];
            return T;
        }
        for (Index j = 0; j < antennas_; ++j)
            for (Index i = 0; i < antennas_; ++i) T(i, j) = std::sqrt(d[i] * d[j]) * correlation_(i, j);
        return T;
    }

    friend ChannelCovariance build_covariance(const LargeScale&, const std::optional<VisibilityMask>&, double);

private:
    Mode mode_ = Mode::Correlated;
    Index antennas_ = 0;
    bool identity_ = true;
    ComplexMatrix correlation_;
    ComplexMatrix factor_;
    std::vector<std::vector<double>> variances_;
    std::vector<SupportColumn> supports_;
};

/// Builds Theta_k for every user. Without a mask all antennas are visible and
/// the exponential correlation model with coefficient `iota` applies; with a
/// mask the correlation is the identity and iota must be zero.
inline ChannelCovariance build_covariance(const LargeScale& ls, const std::optional<VisibilityMask>& mask, double iota) {
    const Index M = ls.antennas;
    const Index K = ls.users;
    ChannelCovariance cov;
    cov.antennas_ = M;
    cov.variances_.assign(K, std::vector<double>(M, 0.0));
    cov.supports_.resize(K);

    if (mask) {
        if (iota != 0.0)
            throw UnsupportedError("build_covariance: visibility regions are only supported with uncorrelated antennas");
        if (mask->antennas != M || mask->regions.size() != K)
            throw DimensionError("build_covariance: mask dimensions do not match large-scale gains");
        cov.mode_ = ChannelCovariance::Mode::Visibility;
        cov.identity_ = true;
        const double scale = mask->scale();
        for (Index k = 0; k < K; ++k) {
            for (Index m : mask->regions[k]) cov.variances_[k][m] = scale * ls(k, m);
            cov.supports_[k] = mask->regions[k];
        }
        return cov;
    }

    cov.mode_ = ChannelCovariance::Mode::Correlated;
    cov.identity_ = iota == 0.0;
    cov.correlation_ = exp_correlation(M, iota);
    if (!cov.identity_) {
        try {
            cov.factor_ = cholesky_factor(cov.correlation_);
        } catch (const FactorizationError& e) {
            throw CovarianceError(std::string("build_covariance: ") + e.what());
        }
    }
    const SupportColumn all = SparsitySupport::full(M, 1).columns[0];
    for (Index k = 0; k < K; ++k) {
        for (Index m = 0; m < M; ++m) cov.variances_[k][m] = ls(k, m);
        cov.supports_[k] = all;
    }
    return cov;
}

//------------------------------------------------------------------------------
// Realizations
//------------------------------------------------------------------------------

struct ChannelRealization {
    ComplexMatrix H;
    SparsitySupport support;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
};

/// h_k = Theta_k^{1/2} g with g ~ CN(0, I_M). Entries outside the support are
/// exactly zero. A full M-length draw is consumed per user in every mode.
inline ChannelRealization sample_channel(const ChannelCovariance& cov, SeededRng& rng, std::uint64_t config_hash = 0) {
    const Index M = cov.antennas();
    const Index K = cov.users();
    ChannelRealization out{ComplexMatrix(M, K), SparsitySupport{M, std::vector<SupportColumn>(K)}, rng.seed(), config_hash};
    for (Index k = 0; k < K; ++k) {
        const ComplexVector g = sample_complex_gaussian(M, rng);
        const auto& d = cov.variances(k);
        auto h = out.H.col(k);
        if (cov.mode() == ChannelCovariance::Mode::Visibility || cov.correlation_is_identity()) {
            for (Index m : cov.support(k)) h[m] = std::sqrt(d[m]) * g[m];
        } else {
            const ComplexMatrix& L = cov.correlation_factor();
            for (Index i = 0; i < M; ++i) {
                cplx s{0.0, 0.0};
                for (Index p = 0; p <= i; ++p) s += L(i, p) * g[p];
                h[i] = std::sqrt(d[i]) * s;
            }
        }
        out.support.columns[k] = cov.support(k);
    }
    return out;
}

} // namespace rkmimo::channel
