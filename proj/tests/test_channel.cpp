#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "rkmimo/channel.hpp"
#include "test_support.hpp"

using namespace rkmimo;
using namespace rkmimo::channel;

namespace {

LargeScale constant_gains(Index K, Index M, double beta) { return {K, M, std::vector<double>(K * M, beta)}; }

} // namespace

TEST(Geometry, PresetsDropAboveMinimumDistance) {
    SeededRng rng(1);
    for (const auto& g : {CellGeometry::mmimo64(), CellGeometry::xl256()}) {
        for (int rep = 0; rep < 200; ++rep) {
            const auto drop = drop_users(g, 32, rng);
            ASSERT_EQ(drop.positions.size(), 32u);
            for (const auto& p : drop.positions) {
                EXPECT_GE(distance_to_array(g, p), g.min_dist_m);
                if (g.layout == ArrayLayout::Centered) {
                    EXPECT_LE(std::abs(p.x), 0.5 * g.side_m);
                    EXPECT_LE(std::abs(p.y), 0.5 * g.side_m);
                } else {
                    EXPECT_GE(p.x, 0.0);
                    EXPECT_LE(p.x, g.side_m);
                    EXPECT_GE(p.y, 0.0);
                    EXPECT_LE(p.y, g.side_m);
                }
            }
        }
    }
}

TEST(Geometry, EdgeDistanceIsDistanceToSegment) {
    const auto g = CellGeometry::xl256();
    EXPECT_DOUBLE_EQ(distance_to_array(g, {100.0, 30.0}), 30.0);
    EXPECT_DOUBLE_EQ(distance_to_array(g, {-30.0, 40.0}), 50.0);
    EXPECT_DOUBLE_EQ(distance_to_array(g, {280.0, 40.0}), 50.0);
    EXPECT_DOUBLE_EQ(antenna_position(g, 0).x, 250.0 / 256.0 * 0.5);
    EXPECT_DOUBLE_EQ(antenna_position(g, 255).x, 250.0 - 250.0 / 256.0 * 0.5);
}

TEST(Geometry, UnconstrainedDropsAreCenteredOnAverage) {
    CellGeometry g{ArrayLayout::Centered, 400.0, 0.0, 64};
    SeededRng rng(2);
    double sx = 0.0, sy = 0.0;
    const int n = 10'000;
    for (int i = 0; i < n; ++i) {
        const auto p = drop_users(g, 1, rng).positions[0];
        sx += p.x;
        sy += p.y;
    }
    EXPECT_LE(std::abs(sx / n), 0.02 * g.side_m);
    EXPECT_LE(std::abs(sy / n), 0.02 * g.side_m);
}

TEST(Geometry, RejectsInfeasibleRequests) {
    SeededRng rng(3);
    EXPECT_THROW(drop_users(CellGeometry::mmimo64(), 0, rng), GeometryError);
    CellGeometry bad{ArrayLayout::Centered, 10.0, 9.0, 4};
    EXPECT_THROW(drop_users(bad, 1, rng), GeometryError);
    CellGeometry negative{ArrayLayout::Centered, -1.0, 0.0, 4};
    EXPECT_THROW(drop_users(negative, 1, rng), GeometryError);
}

TEST(Pathloss, ReferenceValues) {
    EXPECT_NEAR(pathloss_db(1.0), -30.5, 1e-12);
    EXPECT_NEAR(pathloss_db(10.0), -67.2, 1e-12);
    EXPECT_NEAR(pathloss_db(100.0), -103.9, 1e-12);
    EXPECT_THROW(pathloss_db(0.0), DomainError);
    EXPECT_NEAR(db_to_linear(-10.0), 0.1, 1e-15);
}

TEST(Pathloss, MedianNormalizationIsStable) {
    const double a = median_cell_gain(CellGeometry::mmimo64());
    const double b = median_cell_gain(CellGeometry::mmimo64());
    EXPECT_EQ(a, b);
    EXPECT_GT(a, 0.0);
    // The median user sits between the minimum distance and the cell corner.
    EXPECT_LT(a, db_to_linear(pathloss_db(35.0)));
    EXPECT_GT(a, db_to_linear(pathloss_db(400.0 / std::sqrt(2.0))));
}

TEST(Correlation, ExponentialModelEntries) {
    const auto R0 = exp_correlation(5, 0.0);
    EXPECT_EQ(R0, ComplexMatrix::identity(5));
    const auto R = exp_correlation(3, 0.5);
    EXPECT_DOUBLE_EQ(R(0, 1).real(), 0.5);
    EXPECT_DOUBLE_EQ(R(0, 2).real(), 0.25);
    EXPECT_DOUBLE_EQ(R(2, 0).real(), 0.25);
    EXPECT_THROW(exp_correlation(3, 1.0), DomainError);
    EXPECT_THROW(exp_correlation(3, -0.1), DomainError);
}

TEST(Correlation, PositiveDefiniteAndSymmetric) {
    for (double iota : {0.1, 0.5, 0.9, 0.99}) {
        const auto R = exp_correlation(64, iota);
        for (Index i = 0; i < 64; ++i) {
            EXPECT_EQ(R(i, i), cplx(1.0, 0.0));
            for (Index j = 0; j < 64; ++j) EXPECT_EQ(R(i, j), R(j, i));
        }
        EXPECT_NO_THROW(cholesky_factor(R)) << "iota=" << iota;
    }
}

TEST(Visibility, RegionsAroundCenter) {
    EXPECT_EQ(visibility_region(8, 3, 3), (SupportColumn{2, 3, 4}));
    EXPECT_EQ(visibility_region(8, 3, 0), (SupportColumn{0, 1}));
    EXPECT_EQ(visibility_region(8, 4, 3), (SupportColumn{2, 3, 4, 5}));
    EXPECT_EQ(visibility_region(8, 4, 7), (SupportColumn{6, 7}));
    EXPECT_EQ(visibility_region(8, 8, 0).size(), 5u);
    EXPECT_THROW(visibility_region(8, 9, 0), DomainError);
    EXPECT_THROW(visibility_region(8, 0, 0), DomainError);
}

TEST(Visibility, RandomRegionsAreContiguousAndBounded) {
    SeededRng rng(4);
    for (Index D : {1u, 2u, 7u, 8u, 16u, 256u}) {
        const auto mask = build_visibility(256, D, 64, rng);
        for (Index k = 0; k < 64; ++k) {
            const auto& V = mask.regions[k];
            ASSERT_FALSE(V.empty());
            EXPECT_LE(V.size(), D);
            EXPECT_TRUE(std::find(V.begin(), V.end(), mask.centers[k]) != V.end());
            for (Index j = 1; j < V.size(); ++j) EXPECT_EQ(V[j], V[j - 1] + 1);
            EXPECT_LT(V.back(), 256u);
        }
    }
}

TEST(Covariance, StationaryUncorrelatedIsScaledIdentity) {
    const auto cov = build_covariance(constant_gains(2, 4, 1.0), std::nullopt, 0.0);
    EXPECT_EQ(cov.theta(0), ComplexMatrix::identity(4));
    EXPECT_EQ(cov.support(1).size(), 4u);
}

TEST(Covariance, VisibilityModeScalesVisibleAntennas) {
    const double beta = 0.3;
    VisibilityMask mask{4, 2, {0}, {{0, 1}}};
    const auto cov = build_covariance(constant_gains(1, 4, beta), mask, 0.0);
    const auto T = cov.theta(0);
    for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 4; ++j) {
            const double expect = (i == j && i < 2) ? 2.0 * beta : 0.0;
            EXPECT_DOUBLE_EQ(T(i, j).real(), expect);
        }
}

TEST(Covariance, VisibilityPreservesTraceForUnclippedRegions) {
    const Index M = 64, D = 8;
    const double beta = 1.7;
    const auto ls = constant_gains(1, M, beta);
    VisibilityMask mask{M, D, {20}, {visibility_region(M, D, 20)}};
    ASSERT_EQ(mask.regions[0].size(), D);
    const auto stationary = build_covariance(ls, std::nullopt, 0.0).variances(0);
    const auto nonstationary = build_covariance(ls, mask, 0.0).variances(0);
    double a = 0.0, b = 0.0;
    for (Index m = 0; m < M; ++m) {
        a += stationary[m];
        b += nonstationary[m];
    }
    EXPECT_NEAR(a, b, 1e-12 * a);
}

TEST(Covariance, RejectsCorrelationWithVisibility) {
    VisibilityMask mask{4, 2, {0}, {{0, 1}}};
    EXPECT_THROW(build_covariance(constant_gains(1, 4, 1.0), mask, 0.5), UnsupportedError);
}

TEST(Sampling, AveragePowerMatchesTrace) {
    SeededRng rng(5);
    const Index M = 64;
    const auto cov = build_covariance(constant_gains(1, M, 1.0), std::nullopt, 0.5);
    double power = 0.0;
    const int n = 10'000;
    for (int i = 0; i < n; ++i) power += squared_norm(sample_channel(cov, rng).H.col(0));
    power /= n;
    EXPECT_GE(power, 0.98 * M);
    EXPECT_LE(power, 1.02 * M);
}

TEST(Sampling, EmpiricalCovarianceMatchesModel) {
    SeededRng rng(6);
    const Index M = 8;
    LargeScale ls{1, M, {}};
    for (Index m = 0; m < M; ++m) ls.beta.push_back(0.5 + 0.25 * static_cast<double>(m % 3));
    const auto cov = build_covariance(ls, std::nullopt, 0.7);
    const auto theta = cov.theta(0);
    ComplexMatrix S(M, M);
    const int n = 100'000;
    for (int t = 0; t < n; ++t) {
        const auto ch = sample_channel(cov, rng);
        const auto h = ch.H.col(0);
        for (Index j = 0; j < M; ++j)
            for (Index i = 0; i < M; ++i) S(i, j) += h[i] * std::conj(h[j]);
    }
    double worst = 0.0;
    for (Index j = 0; j < M; ++j)
        for (Index i = 0; i < M; ++i) worst = std::max(worst, std::abs(S(i, j) / double(n) - theta(i, j)));
    EXPECT_LE(worst, 0.05);
}

TEST(Sampling, EntriesOutsideVisibilityAreZero) {
    SeededRng rng(7);
    const auto ch = fixtures::unit_gain_channel(256, 32, 0.0, Index{8}, rng);
    for (Index k = 0; k < 32; ++k) {
        const auto& V = ch.support.columns[k];
        for (Index m = 0; m < 256; ++m) {
            const bool visible = std::binary_search(V.begin(), V.end(), m);
            if (!visible) EXPECT_EQ(ch.H(m, k), cplx(0.0, 0.0));
            else EXPECT_NE(ch.H(m, k), cplx(0.0, 0.0));
        }
    }
    EXPECT_TRUE(ch.support.covers(ch.H));
}

TEST(Sampling, ReproducibleForFixedSeed) {
    const auto ls = constant_gains(4, 16, 1.0);
    const auto cov = build_covariance(ls, std::nullopt, 0.3);
    SeededRng a(99), b(99);
    const auto x = sample_channel(cov, a, 17);
    const auto y = sample_channel(cov, b, 17);
    EXPECT_EQ(x.H, y.H);
    EXPECT_EQ(x.seed, y.seed);
    EXPECT_EQ(x.config_hash, 17u);
}

TEST(Sampling, NormalizedGeometryGainsAverageNearOne) {
    const auto g = CellGeometry::mmimo64();
    const double ref = median_cell_gain(g);
    SeededRng rng(8);
    std::vector<double> gains;
    for (int i = 0; i < 4000; ++i) {
        const auto ls = large_scale(g, drop_users(g, 1, rng), ref);
        gains.push_back(ls(0, 0));
    }
    std::nth_element(gains.begin(), gains.begin() + gains.size() / 2, gains.end());
    const double median = gains[gains.size() / 2];
    EXPECT_GT(median, 0.8);
    EXPECT_LT(median, 1.25);
}
