// SPDX-License-Identifier: Apache-2.0
//
// Squared 2-Wasserstein distance between diagonal Gaussians and squared
// Euclidean distance between points, with closed-form gradients.
//
// For N(mu_a, diag sigma_a) and N(mu_b, diag sigma_b):
//   W2^2 = |mu_a - mu_b|^2 + |sqrt(sigma_a) - sqrt(sigma_b)|^2
// which is the commuting-covariance case of the general trace formula.

#pragma once

#include <span>

#include "pmlam/types.h"

namespace pmlam {

double w2_squared(std::span<const double> mu_a, std::span<const double> sigma_a, std::span<const double> mu_b,
                  std::span<const double> sigma_b);

/// Same kernel on precomputed square roots of the variances.
double w2_squared_sqrt(std::span<const double> mu_a, std::span<const double> sqrt_sigma_a,
                       std::span<const double> mu_b, std::span<const double> sqrt_sigma_b);

/// Gradient buffers are accumulated into (+= scale * dW2/dx). Any span may be
/// empty to skip that output.
struct W2Grad {
    std::span<double> mu_a, sigma_a, mu_b, sigma_b;
};

/// d/dmu_a = 2 (mu_a - mu_b);  d/dsigma_a = 1 - sqrt(sigma_b) / sqrt(sigma_a). Symmetric for b.
/// Requires strictly positive variances.
void w2_squared_grad(std::span<const double> mu_a, std::span<const double> sigma_a, std::span<const double> mu_b,
                     std::span<const double> sigma_b, const W2Grad& out, double scale = 1.0);

double euclidean_squared(std::span<const double> a, std::span<const double> b);

/// out_a += scale * 2 (a - b); out_b -= scale * 2 (a - b).
void euclidean_squared_grad(std::span<const double> a, std::span<const double> b, std::span<double> out_a,
                            std::span<double> out_b, double scale = 1.0);

}  // namespace pmlam
