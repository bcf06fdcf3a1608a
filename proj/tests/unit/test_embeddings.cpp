// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.h"
#include "pmlam/embeddings.h"

using namespace pmlam;

TEST(Init, ShapeDeterminismAndNorms) {
    const auto a = init_table(100000, 50, 17);
    EXPECT_EQ(a.rows, 100000u);
    EXPECT_EQ(a.dim, 50u);
    EXPECT_EQ(a.mu.size(), 100000u * 50u);
    const auto b = init_table(100000, 50, 17);
    EXPECT_TRUE(a == b);
    EXPECT_FALSE(a == init_table(100000, 50, 18));

    double max_norm = 0.0, sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i) {
        double n = 0.0;
        for (double x : a.mu_row(i)) n += x * x;
        max_norm = std::max(max_norm, std::sqrt(n));
    }
    for (double x : a.mu) {
        sum += x;
        sq += x * x;
    }
    const double n = static_cast<double>(a.mu.size());
    EXPECT_LT(max_norm, 0.15);
    EXPECT_NEAR(sum / n, 0.0, 1e-4);
    EXPECT_NEAR(std::sqrt(sq / n), 0.01, 1e-4);
    for (double s : a.sigma) ASSERT_EQ(s, 0.1);
    EXPECT_TRUE(satisfies_invariants(a));
}

TEST(Init, LargeSigmaIsProjected) {
    const auto t = init_table(3, 4, 1, 0.01, 0.9);
    // |(0.9, 0.9, 0.9, 0.9)| = 1.8, so each entry becomes 0.5.
    for (double s : t.sigma) EXPECT_NEAR(s, 0.5, 1e-15);
    EXPECT_THROW(init_table(3, 0, 1), std::invalid_argument);
}

TEST(Sample, ZeroNoiseReturnsMean) {
    const auto t = init_table(5, 8, 3);
    const std::vector<double> zero(8, 0.0);
    const auto s = sample_with_noise(t, 2, zero);
    for (std::size_t d = 0; d < 8; ++d) EXPECT_EQ(s.value[d], t.mu_row(2)[d]);
}

TEST(Sample, ValueIsMeanPlusScaledNoise) {
    GaussianEmbeddingTable t(1, 3);
    t.mu = {0.1, -0.2, 0.3};
    t.sigma = {0.25, 0.04, kSigmaMin};
    const std::vector<double> eps{1.0, -2.0, 3.0};
    const auto s = sample_with_noise(t, 0, eps);
    EXPECT_DOUBLE_EQ(s.value[0], 0.6);
    EXPECT_DOUBLE_EQ(s.value[1], -0.6);
    EXPECT_NEAR(s.value[2], 0.3, std::sqrt(kSigmaMin) * 3.0 + 1e-15);
    EXPECT_EQ(s.noise, eps);
    EXPECT_THROW(sample_with_noise(t, 1, eps), std::out_of_range);
}

TEST(Sample, MonteCarloMeanAndVariance) {
    GaussianEmbeddingTable t(1, 4);
    t.mu = {0.2, -0.1, 0.0, 0.5};
    t.sigma = {0.1, 0.3, 0.05, 0.2};
    std::mt19937_64 rng(99);
    const int n = 100000;
    std::vector<double> mean(4, 0.0), m2(4, 0.0);
    for (int k = 0; k < n; ++k) {
        const auto s = sample(t, 0, rng);
        for (int d = 0; d < 4; ++d) {
            mean[d] += s.value[d];
            m2[d] += s.value[d] * s.value[d];
        }
    }
    for (int d = 0; d < 4; ++d) {
        mean[d] /= n;
        const double var = m2[d] / n - mean[d] * mean[d];
        EXPECT_NEAR(mean[d], t.mu[d], 3.0 * std::sqrt(t.sigma[d] / n)) << d;
        // Var of the sample variance of a normal is 2 sigma^2 / n.
        EXPECT_NEAR(var, t.sigma[d], 4.0 * t.sigma[d] * std::sqrt(2.0 / n)) << d;
    }
}

TEST(Project, InsideBallUnchanged) {
    GaussianEmbeddingTable t(1, 2);
    t.mu = {0.3, 0.4};
    t.sigma = {0.2, 0.3};
    const auto before = t;
    project(t);
    EXPECT_TRUE(t == before);
}

TEST(Project, RadialMeanAndTwoStepSigma) {
    GaussianEmbeddingTable t(1, 2);
    t.mu = {3.0, 4.0};
    t.sigma = {2.0, 2.0};
    project(t);
    EXPECT_DOUBLE_EQ(t.mu[0], 0.6);
    EXPECT_DOUBLE_EQ(t.mu[1], 0.8);
    EXPECT_NEAR(t.sigma[0], 1.0 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(t.sigma[1], 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Project, ClampsNonPositiveVariance) {
    GaussianEmbeddingTable t(1, 3);
    t.sigma = {0.0, -1.0, 0.5};
    project(t);
    EXPECT_EQ(t.sigma[0], kSigmaMin);
    EXPECT_EQ(t.sigma[1], kSigmaMin);
    EXPECT_EQ(t.sigma[2], 0.5);
}

TEST(Project, IdempotentAndRestoresInvariants) {
    std::mt19937_64 rng(5);
    for (std::size_t h : {2u, 8u, 50u}) {
        auto t = oracle::random_table(200, h, rng, -0.5, 3.0);
        for (auto& x : t.mu) x *= 10.0;
        project(t);
        EXPECT_TRUE(satisfies_invariants(t));
        auto again = t;
        project(again);
        for (std::size_t k = 0; k < t.mu.size(); ++k) {
            ASSERT_NEAR(again.mu[k], t.mu[k], 1e-15);
            // Entries pushed below kSigmaMin by the norm rescale are lifted back
            // to the clamp bound on a second pass, at most kSigmaMin away.
            ASSERT_NEAR(again.sigma[k], t.sigma[k], kSigmaMin);
        }
    }
}

TEST(Project, SigmaFloorBoundsProjectedRows) {
    GaussianEmbeddingTable t(1, 4);
    t.sigma = {1.0, 1.0, 1.0, 1e-9};
    project(t);
    EXPECT_GE(t.sigma[3], sigma_floor(4));
    EXPECT_NEAR(t.sigma[3], kSigmaMin / std::sqrt(3.0 + kSigmaMin * kSigmaMin), 1e-20);
}

TEST(ThetaOps, AxpyDotNorm) {
    Theta a{GaussianEmbeddingTable(1, 2), GaussianEmbeddingTable(1, 2)};
    a.users.mu = {1, 2};
    a.users.sigma = {3, 4};
    a.items.mu = {5, 6};
    a.items.sigma = {7, 8};
    auto b = zeros_like(a);
    axpy(b, 2.0, a);
    EXPECT_EQ(b.items.sigma[1], 16.0);
    EXPECT_EQ(dot(a, b), 2.0 * squared_norm(a));
    EXPECT_EQ(squared_norm(a), 204.0);
    EXPECT_TRUE(all_finite(a));
    b.users.mu[0] = std::nan("");
    EXPECT_FALSE(all_finite(b));
    fill_zero(b);
    EXPECT_EQ(squared_norm(b), 0.0);
}
