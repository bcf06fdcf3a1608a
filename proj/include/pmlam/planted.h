// SPDX-License-Identifier: Apache-2.0
//
// Synthetic implicit feedback with planted block structure: users and items are
// split into clusters and users interact mostly with items of their own cluster.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pmlam/data.h"

namespace pmlam {

struct PlantedSpec {
    std::size_t n_users = 20;
    std::size_t n_items = 20;
    std::size_t n_clusters = 2;
    double p_in = 0.9;   // interaction probability inside the user's cluster
    double p_out = 0.0;  // and outside it
    std::size_t min_per_user = 5;
    std::uint64_t seed = 1;
};

struct PlantedData {
    std::vector<ImplicitPair> pairs;  // user "u<k>", item "i<k>"
    std::vector<std::size_t> user_cluster;
    std::vector<std::size_t> item_cluster;
};

/// Users with fewer than min_per_user in-cluster hits are topped up from their
/// own cluster, so every user can be split into five folds.
PlantedData make_planted(const PlantedSpec& spec);

/// Dense dataset (no degree filtering) built from the planted pairs.
InteractionDataset planted_dataset(const PlantedData& data);

/// Cluster label of each internal item of `ds`, e.g. "c0".
std::vector<std::string> planted_item_labels(const PlantedData& data, const InteractionDataset& ds);

/// Writes ratings.tsv (user, item, 5) and item_labels.tsv (item, label).
void write_planted(const std::filesystem::path& dir, const PlantedData& data);

/// Reads a two-column `item<TAB>label` file into per-internal-item labels
/// (empty label for items not listed).
std::vector<std::string> load_item_labels(const std::filesystem::path& path, const InteractionDataset& ds);

}  // namespace pmlam
