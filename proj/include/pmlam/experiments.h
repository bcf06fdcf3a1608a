// SPDX-License-Identifier: Apache-2.0
//
// The eight-variant ablation matrix and the margin case study.
//
//   (1) fixed margin, deterministic embeddings
//   (2) fixed margin, Gaussian embeddings
//   (3) adaptive margin (gap features), deterministic
//   (4) adaptive margin from concatenated embeddings, deterministic
//   (5) adaptive margin from summed embeddings, deterministic
//   (6) adaptive margin, Gaussian
//   (7) (6) plus user-user / item-item losses with fixed margins
//   (8) (6) plus user-user / item-item losses with adaptive margins

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pmlam/config.h"
#include "pmlam/data.h"
#include "pmlam/model.h"

namespace pmlam {

struct AblationVariant {
    int id = 0;
    std::string label;
};

const std::vector<AblationVariant>& ablation_variants();

/// `base` with the variant's distance, margin modes, relations and indicator mode.
RunConfig variant_config(const RunConfig& base, int id);

struct AblationRow {
    int variant = 0;
    std::string label;
    std::uint64_t seed = 0;
    std::size_t k = 10;
    double recall = 0.0;
    double ndcg = 0.0;
};

/// Trains every requested variant once per seed on `fold` and scores R@K / N@K.
std::vector<AblationRow> run_ablation(const RunConfig& base, const FoldSplit& fold, std::size_t n_items,
                                      std::span<const std::uint64_t> seeds, std::span<const int> variants,
                                      std::size_t k = 10,
                                      const std::function<void(const AblationRow&)>& progress = {});

/// Mean recall / ndcg per variant, in variant order.
std::vector<AblationRow> ablation_means(std::span<const AblationRow> rows);

/// CSV `variant,label,seed,K,recall,ndcg`; means use seed "mean".
void write_ablation_csv(const std::filesystem::path& path, std::span<const AblationRow> rows,
                        std::span<const AblationRow> means, const std::string& header = {});

struct CaseStudyRow {
    std::string user;
    std::string positive;
    std::string positive_label;
    std::string similar;  // negative sharing the positive's label
    std::string dissimilar;
    std::string dissimilar_label;
    double margin_similar = 0.0;
    double margin_dissimilar = 0.0;
};

/// Samples `n_users` users (reported in internal-id order) and `per_user`
/// positives each; for each positive draws one unobserved item with the same
/// label and one with a different label, and reports the U-I margins computed
/// on the mean embeddings.
std::vector<CaseStudyRow> case_study(const ModelState& state, const InteractionDataset& ds, const FoldSplit& fold,
                                     std::span<const std::string> item_labels, std::size_t n_users,
                                     std::size_t per_user, std::uint64_t seed);

struct CaseStudySummary {
    double mean_similar = 0.0;
    double mean_dissimilar = 0.0;
    std::size_t rows = 0;
};
CaseStudySummary summarize(std::span<const CaseStudyRow> rows);

void write_case_study_csv(const std::filesystem::path& path, std::span<const CaseStudyRow> rows,
                          const std::string& header = {});

}  // namespace pmlam
