// SPDX-License-Identifier: Apache-2.0
//
// Everything that evolves during training: embeddings, margin networks,
// optimizer moments, the sampling RNG and the epoch counter.

#pragma once

#include <array>
#include <cstdint>
#include <random>

#include "pmlam/bilevel.h"
#include "pmlam/config.h"
#include "pmlam/embeddings.h"
#include "pmlam/optimizer.h"

namespace pmlam {

struct ModelState {
    Theta theta;
    MarginSet margins;
    ThetaOptimizer theta_opt;
    std::array<OptimizerState, 3> phi_opts;
    std::mt19937_64 rng;
    std::size_t epochs_done = 0;

    bool operator==(const ModelState&) const = default;
};

/// Fresh state for `cfg`. Tables, networks and the training RNG are seeded from
/// independent streams derived from cfg.seed.
ModelState init_model(const RunConfig& cfg, std::size_t n_users, std::size_t n_items);

BilevelSettings bilevel_settings(const RunConfig& cfg);

}  // namespace pmlam
