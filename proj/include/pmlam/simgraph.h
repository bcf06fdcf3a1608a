// SPDX-License-Identifier: Apache-2.0
//
// User-user and item-item neighbor sets from thresholded cosine similarity of
// binary interaction rows.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "pmlam/types.h"

namespace pmlam {

struct NeighborSets {
    EntityKind kind = EntityKind::User;
    double threshold = 0.2;
    std::vector<std::vector<Index>> neighbors;  // sorted, no self-loops, symmetric

    std::size_t size() const { return neighbors.size(); }
    std::size_t n_edges() const;  // directed count (each undirected pair counted twice)
    bool operator==(const NeighborSets&) const = default;
};

/// |A intersect B| / sqrt(|A| |B|) over sorted index sets. Throws on an empty set.
double cosine_binary(std::span<const Index> a, std::span<const Index> b);

/// Neighbors are all pairs with similarity >= threshold. `rows` are the sorted
/// sets of each entity (users: their items; items: their users); `n_cols` is the
/// size of the other side. Only co-occurring pairs are examined.
NeighborSets build_neighbors(const std::vector<std::vector<Index>>& rows, std::size_t n_cols, double threshold,
                             EntityKind kind);

/// Cache keyed by (dataset hash, fold, threshold, kind). load returns nullopt
/// when the file is absent or keyed differently.
struct NeighborCacheKey {
    std::uint64_t dataset_hash = 0;
    std::uint64_t fold = 0;
    double threshold = 0.0;
    EntityKind kind = EntityKind::User;
};
void save_neighbors(const std::filesystem::path& path, const NeighborSets& sets, const NeighborCacheKey& key);
std::optional<NeighborSets> load_neighbors(const std::filesystem::path& path, const NeighborCacheKey& key);

}  // namespace pmlam
