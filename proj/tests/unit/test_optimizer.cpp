// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pmlam/optimizer.h"

using namespace pmlam;

TEST(Sgd, PlainStep) {
    auto opt = make_optimizer(OptimizerKind::Sgd, 0.1);
    std::vector<double> x{1.0, -2.0};
    const std::vector<double> g{0.5, -1.0};
    opt.step(x, g);
    EXPECT_DOUBLE_EQ(x[0], 0.95);
    EXPECT_DOUBLE_EQ(x[1], -1.9);
    EXPECT_EQ(opt.t, 1u);
}

TEST(Adam, FirstStepHasStepSizeMagnitude) {
    auto opt = make_optimizer(OptimizerKind::Adam, 0.01);
    std::vector<double> x{0.0, 0.0, 0.0};
    const std::vector<double> g{3.0, -1e-3, 0.0};
    opt.step(x, g);
    EXPECT_NEAR(x[0], -0.01, 1e-10);
    EXPECT_NEAR(x[1], 0.01, 1e-7);
    EXPECT_EQ(x[2], 0.0);
}

TEST(Adam, MatchesHandRolledRecurrence) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    auto opt = make_optimizer(OptimizerKind::Adam, 0.05);
    std::vector<double> x{0.3, -0.7}, ref = x, m(2, 0.0), v(2, 0.0);
    for (int t = 1; t <= 25; ++t) {
        const std::vector<double> g{n(rng), n(rng)};
        opt.step(x, g);
        for (int k = 0; k < 2; ++k) {
            m[k] = 0.9 * m[k] + 0.1 * g[k];
            v[k] = 0.999 * v[k] + 0.001 * g[k] * g[k];
            const double mh = m[k] / (1.0 - std::pow(0.9, t));
            const double vh = v[k] / (1.0 - std::pow(0.999, t));
            ref[k] -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
        }
        ASSERT_NEAR(x[0], ref[0], 1e-14);
        ASSERT_NEAR(x[1], ref[1], 1e-14);
    }
}

TEST(Adam, StepIsBoundedByStepSize) {
    // With beta1^2 < beta2 the bias-corrected ratio |m_hat| / sqrt(v_hat) stays
    // below (1 - beta1) / sqrt(1 - beta2) / (1 - beta1^t) * sqrt(1 - beta2^t),
    // which never exceeds ~3.2 for the defaults; typical steps are near 1.
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 1.0);
    auto opt = make_optimizer(OptimizerKind::Adam, 1e-3);
    std::vector<double> x(50, 0.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> g(50);
        for (auto& e : g) e = n(rng) * std::pow(10.0, n(rng));
        const auto before = x;
        opt.step(x, g);
        for (std::size_t k = 0; k < x.size(); ++k) ASSERT_LE(std::abs(x[k] - before[k]), 3.2e-3);
    }
}

TEST(Adam, MinimisesQuadratic) {
    auto opt = make_optimizer(OptimizerKind::Adam, 0.05);
    std::vector<double> x{2.0, -3.0};
    for (int t = 0; t < 2000; ++t) {
        const std::vector<double> g{2.0 * (x[0] - 1.0), 4.0 * (x[1] + 0.5)};
        opt.step(x, g);
    }
    EXPECT_NEAR(x[0], 1.0, 1e-3);
    EXPECT_NEAR(x[1], -0.5, 1e-3);
}

TEST(Optimizer, RejectsMismatchAndBadStep) {
    auto opt = make_optimizer(OptimizerKind::Adam, 0.1);
    std::vector<double> x(2, 0.0);
    const std::vector<double> g(3, 1.0);
    EXPECT_THROW(opt.step(x, g), std::invalid_argument);
    EXPECT_THROW(make_optimizer(OptimizerKind::Sgd, 0.0), std::invalid_argument);
}

TEST(ThetaOptimizerTest, GroupsAreIndependent) {
    Theta theta{GaussianEmbeddingTable(1, 2), GaussianEmbeddingTable(2, 2)};
    Theta grad = zeros_like(theta);
    grad.items.sigma = {1, 1, 1, 1};
    ThetaOptimizer opt(OptimizerKind::Sgd, 0.5);
    opt.step(theta, grad);
    EXPECT_EQ(theta.users.mu, (std::vector<double>{0, 0}));
    EXPECT_EQ(theta.items.sigma, (std::vector<double>{-0.5, -0.5, -0.5, -0.5}));
    for (const auto& g : opt.groups) EXPECT_EQ(g.t, 1u);
}
