// SPDX-License-Identifier: Apache-2.0
//
// First-order optimizers over flat parameter buffers.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "pmlam/embeddings.h"

namespace pmlam {

enum class OptimizerKind : std::uint8_t { Sgd, Adam };

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::Adam;
    double step_size = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::vector<double> m;  // Adam moments, sized lazily on the first step
    std::vector<double> v;
    std::uint64_t t = 0;

    /// params -= update(grad). Throws std::invalid_argument on size mismatch.
    void step(std::span<double> params, std::span<const double> grad);

    bool operator==(const OptimizerState&) const = default;
};

OptimizerState make_optimizer(OptimizerKind kind, double step_size);

/// One optimizer state per array of theta (user mu, user sigma, item mu, item sigma).
struct ThetaOptimizer {
    std::array<OptimizerState, 4> groups;

    ThetaOptimizer() = default;
    ThetaOptimizer(OptimizerKind kind, double step_size);
    void step(Theta& theta, const Theta& grad);

    bool operator==(const ThetaOptimizer&) const = default;
};

}  // namespace pmlam
