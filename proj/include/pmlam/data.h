// SPDX-License-Identifier: Apache-2.0
//
// Rating ingestion, implicit-feedback conversion, iterative degree filtering
// and per-user five-fold splitting.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pmlam/types.h"

namespace pmlam {

struct RawRating {
    std::string user_ext_id;
    std::string item_ext_id;
    double rating = 0.0;
    std::optional<std::int64_t> timestamp;
};

struct ImplicitPair {
    std::string user;
    std::string item;
    bool operator==(const ImplicitPair&) const = default;
};

/// Binary implicit-feedback matrix in CSR form plus the external id maps.
/// Rows are strictly increasing item indices.
struct InteractionDataset {
    std::size_t n_users = 0;
    std::size_t n_items = 0;
    std::vector<std::size_t> row_offsets;  // n_users + 1
    std::vector<Index> item_indices;
    std::vector<std::string> user_ids;  // internal -> external
    std::vector<std::string> item_ids;
    std::unordered_map<std::string, Index> user_lookup;  // external -> internal
    std::unordered_map<std::string, Index> item_lookup;

    void rebuild_lookups();

    std::span<const Index> row(Index user) const {
        return {item_indices.data() + row_offsets[user], row_offsets[user + 1] - row_offsets[user]};
    }
    std::size_t n_interactions() const { return item_indices.size(); }
    double density() const;

    std::optional<Index> user_index(std::string_view ext_id) const;
    std::optional<Index> item_index(std::string_view ext_id) const;

    /// Hash over the CSR structure (not the id maps).
    std::uint64_t content_hash() const;
};

/// Per-user train (S_i) and test (T_i) item lists for one fold. Both sorted.
struct FoldSplit {
    std::size_t fold_count = 5;
    std::size_t fold_index = 0;
    std::uint64_t rng_seed = 0;
    std::vector<std::vector<Index>> train;
    std::vector<std::vector<Index>> test;
};

/// Parses one `user<d>item<d>rating[<d>timestamp]` line.
RawRating parse_rating_line(std::string_view line, char delimiter, std::size_t line_no);

/// Reads a tab- or comma-separated rating file (delimiter auto-detected from the
/// first data line) and keeps pairs with rating >= threshold, deduplicated, in
/// first-seen order. A non-numeric rating on the first line is treated as a header.
std::vector<ImplicitPair> ingest(const std::filesystem::path& path, double rating_threshold = 4.0);

/// Removes users with < min_user and items with < min_item interactions until
/// nothing changes, then reindexes both sides densely in first-seen order.
InteractionDataset filter_iterative(std::span<const ImplicitPair> pairs, std::size_t min_user,
                                    std::size_t min_item);

/// Fold id for each stored interaction (aligned with item_indices). Each user's
/// items are shuffled, then dealt round-robin into `fold_count` folds.
std::vector<std::uint8_t> assign_folds(const InteractionDataset& ds, std::uint64_t seed,
                                       std::size_t fold_count = 5);

FoldSplit make_fold(const InteractionDataset& ds, std::span<const std::uint8_t> assignment,
                    std::size_t fold_index, std::uint64_t seed, std::size_t fold_count = 5);

std::vector<FoldSplit> split_five_fold(const InteractionDataset& ds, std::uint64_t seed);

/// Items of the transposed training matrix: for each item, the sorted users holding it in S_i.
std::vector<std::vector<Index>> transpose_rows(const std::vector<std::vector<Index>>& rows,
                                               std::size_t n_cols);

// Cache files. Layouts are described in docs/file_formats.md.
void save_dataset(const InteractionDataset& ds, const std::filesystem::path& dir);
InteractionDataset load_dataset(const std::filesystem::path& dir);
void save_folds(const std::filesystem::path& path, std::span<const std::uint8_t> assignment,
                std::uint64_t seed, std::size_t fold_count);
struct FoldFile {
    std::uint64_t seed = 0;
    std::size_t fold_count = 5;
    std::vector<std::uint8_t> assignment;
};
FoldFile load_folds(const std::filesystem::path& path);

}  // namespace pmlam
