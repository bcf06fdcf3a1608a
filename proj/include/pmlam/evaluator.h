// SPDX-License-Identifier: Apache-2.0
//
// Top-K evaluation: every item outside the user's training set is ranked by
// distance (ascending, ties by item index) and scored against the held-out
// items with Recall@K and NDCG@K.

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "pmlam/data.h"
#include "pmlam/embeddings.h"
#include "pmlam/types.h"

namespace pmlam {

struct RankedItem {
    Index item = 0;
    double distance = 0.0;
};

/// Ranks all items not in `train` (sorted). top_k == 0 returns the full ordering.
std::vector<RankedItem> rank_items(const Theta& theta, Index user, std::span<const Index> train, DistanceKind kind,
                                   std::size_t top_k = 0);

/// |top-K intersect test| / |test|. `test` must be sorted and nonempty.
double recall_at_k(std::span<const Index> ranked, std::span<const Index> test, std::size_t k);

/// DCG with gain 1/log2(p + 1) at 1-based position p, normalised by the ideal
/// DCG over min(K, |test|) positions.
double ndcg_at_k(std::span<const Index> ranked, std::span<const Index> test, std::size_t k);

struct EvalReport {
    std::size_t fold = 0;  // kAllFolds for a cross-fold mean
    std::vector<std::size_t> ks;
    std::vector<double> recall;  // mean per K
    std::vector<double> ndcg;
    std::size_t n_users = 0;                       // users with a nonempty test set
    std::vector<std::vector<double>> user_recall;  // [K][evaluated user]
    std::vector<std::vector<double>> user_ndcg;

    double recall_at(std::size_t k) const;
    double ndcg_at(std::size_t k) const;
    bool operator==(const EvalReport&) const = default;
};

inline constexpr std::size_t kAllFolds = static_cast<std::size_t>(-1);

EvalReport evaluate(const Theta& theta, const FoldSplit& fold, std::span<const std::size_t> ks, DistanceKind kind);

/// Per-K means of the fold means (per-user arrays are dropped).
EvalReport cross_fold_mean(std::span<const EvalReport> folds);

/// CSV `fold,K,recall,ndcg,n_users`, preceded by `header` (already '#'-prefixed).
void write_eval_csv(const std::filesystem::path& path, std::span<const EvalReport> reports,
                    const std::string& header = {});
std::string format_eval_table(std::span<const EvalReport> reports);

struct PairedTTest {
    double mean_difference = 0.0;  // mean(a - b)
    double t = 0.0;
    double p_two_sided = 1.0;
    std::size_t n = 0;
};

/// Paired Student t-test on equal-length samples (n >= 2).
PairedTTest paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace pmlam
