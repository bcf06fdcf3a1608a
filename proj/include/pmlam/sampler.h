// SPDX-License-Identifier: Apache-2.0
//
// Triplet construction for the three relations with two-phase negative
// sampling: every `refresh_period` epochs each anchor gets a pool of
// `pool_size` candidates drawn from the complement of its positive set, and
// per-row negatives are then drawn uniformly from that pool.

#pragma once

#include <array>
#include <cstdint>
#include <future>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "pmlam/losses.h"
#include "pmlam/simgraph.h"
#include "pmlam/types.h"

namespace pmlam {

struct CandidatePool {
    std::vector<std::vector<Index>> candidates;  // per anchor, sorted
    std::size_t pool_size = 0;
    std::size_t epoch_of_build = 0;
};

/// For each anchor, `pool_size` indices drawn uniformly without replacement from
/// [0, universe) minus its exclusion set (minus the anchor itself when
/// `exclude_self`). A complement no larger than pool_size is taken whole.
/// `exclusions[a]` must be sorted and unique.
CandidatePool refresh_pool(const std::vector<std::vector<Index>>& exclusions, std::size_t universe,
                           std::size_t pool_size, bool exclude_self, std::mt19937_64& rng,
                           std::size_t epoch_of_build = 0);

/// Emits `neg_samples` rows per (anchor, positive) pair with negatives drawn
/// uniformly (with replacement) from the anchor's pool. Pairs whose anchor has
/// an empty pool are skipped.
TripletBatch sample_triplets(Relation relation, std::span<const std::pair<Index, Index>> pairs,
                             const CandidatePool& pool, std::size_t neg_samples, std::mt19937_64& rng);

/// Checks every row: positive in the anchor's set, negative outside it and,
/// for same-type relations, distinct from the anchor.
bool batch_membership_ok(const TripletBatch& batch, const std::vector<std::vector<Index>>& positive_sets);

/// Fills batch.noise with rows x 3h standard-normal draws.
void fill_noise(TripletBatch& batch, std::size_t h, std::mt19937_64& rng);

struct SamplerSettings {
    std::size_t batch_size = 5000;  // rows per U-I batch
    std::size_t neg_samples = 2;
    std::size_t pool_size = 500;
    std::size_t refresh_period = 20;
    std::array<bool, 3> relations{true, true, true};
    std::uint64_t seed = 1;
    bool background_refresh = true;
};

/// Plans epochs. Per epoch every training pair is visited once in shuffled
/// order; U-U and I-I draw the same number of (anchor, neighbor) edges,
/// uniformly with replacement, and are cut into the same number of batches so
/// each iteration carries one batch per relation.
///
/// Pools depend only on (seed, build epoch, relation), so the background
/// refresh never changes results and resuming at any epoch reproduces them.
class TripletSampler {
public:
    TripletSampler(std::vector<std::vector<Index>> train, std::size_t n_items, NeighborSets user_neighbors,
                   NeighborSets item_neighbors, SamplerSettings settings);
    ~TripletSampler();
    TripletSampler(const TripletSampler&) = delete;
    TripletSampler& operator=(const TripletSampler&) = delete;

    std::vector<BatchSet> plan_epoch(std::size_t epoch, std::mt19937_64& rng);

    const CandidatePool& pool(Relation r) const { return pools_[relation_slot(r)]; }
    const std::vector<std::vector<Index>>& positive_sets(Relation r) const;
    std::size_t n_pairs() const { return ui_pairs_.size(); }

private:
    std::array<CandidatePool, 3> build_pools(std::size_t build_epoch) const;
    std::size_t build_epoch_for(std::size_t epoch) const;

    std::vector<std::vector<Index>> train_;
    std::size_t n_users_;
    std::size_t n_items_;
    NeighborSets user_nbrs_;
    NeighborSets item_nbrs_;
    SamplerSettings settings_;
    std::vector<std::pair<Index, Index>> ui_pairs_;
    std::array<std::vector<std::pair<Index, Index>>, 3> edges_;
    std::array<CandidatePool, 3> pools_;
    bool have_pools_ = false;
    std::future<std::array<CandidatePool, 3>> pending_;
    std::size_t pending_epoch_ = 0;
};

}  // namespace pmlam
