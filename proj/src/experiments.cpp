// SPDX-License-Identifier: Apache-2.0

#include "pmlam/experiments.h"

#include <algorithm>
#include <iomanip>
#include <map>
#include <random>
#include <stdexcept>

#include "pmlam/evaluator.h"
#include "pmlam/io.h"
#include "pmlam/losses.h"
#include "pmlam/trainer.h"

namespace pmlam {

const std::vector<AblationVariant>& ablation_variants() {
    static const std::vector<AblationVariant> v{
        {1, "fix-ui+det"},        {2, "fix-ui+gauss"},  {3, "ada-ui+det"},
        {4, "ada-ui-cat+det"},    {5, "ada-ui-add+det"}, {6, "ada-ui+gauss"},
        {7, "ada-ui+fix-uu-ii"},  {8, "full"},
    };
    return v;
}

RunConfig variant_config(const RunConfig& base, int id) {
    RunConfig c = base;
    const MarginMode fixed1{false, 1.0};
    const MarginMode adaptive{true, 1.0};
    c.relations = {true, false, false};
    c.indicator_mode = IndicatorMode::Gap;
    c.pair_margin_mode = fixed1;
    switch (id) {
        case 1:
            c.distance_kind = DistanceKind::EuclideanSquared;
            c.margin_mode = fixed1;
            break;
        case 2:
            c.distance_kind = DistanceKind::W2Squared;
            c.margin_mode = fixed1;
            break;
        case 3:
        case 4:
        case 5:
            c.distance_kind = DistanceKind::EuclideanSquared;
            c.margin_mode = adaptive;
            c.indicator_mode = id == 3 ? IndicatorMode::Gap : id == 4 ? IndicatorMode::Concat : IndicatorMode::Sum;
            break;
        case 6:
            c.distance_kind = DistanceKind::W2Squared;
            c.margin_mode = adaptive;
            break;
        case 7:
        case 8:
            c.distance_kind = DistanceKind::W2Squared;
            c.margin_mode = adaptive;
            c.relations = {true, true, true};
            c.pair_margin_mode = id == 8 ? adaptive : fixed1;
            break;
        default: throw InputError("unknown ablation variant " + std::to_string(id) + " (expected 1..8)");
    }
    return c;
}

std::vector<AblationRow> run_ablation(const RunConfig& base, const FoldSplit& fold, std::size_t n_items,
                                      std::span<const std::uint64_t> seeds, std::span<const int> variants,
                                      std::size_t k, const std::function<void(const AblationRow&)>& progress) {
    std::vector<AblationRow> rows;
    const std::vector<std::size_t> ks{k};
    for (int id : variants) {
        const auto& meta = ablation_variants().at(static_cast<std::size_t>(id - 1));
        for (auto seed : seeds) {
            RunConfig cfg = variant_config(base, id);
            cfg.seed = seed;
            cfg.eval_every = 0;
            auto state = init_model(cfg, fold.train.size(), n_items);
            const auto [un, in] = fold_neighbors(cfg, fold, n_items);
            train(cfg, state, fold, n_items, un, in);
            const auto rep = evaluate(state.theta, fold, ks, cfg.distance_kind);
            AblationRow row{id, meta.label, seed, k, rep.recall[0], rep.ndcg[0]};
            if (progress) progress(row);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<AblationRow> ablation_means(std::span<const AblationRow> rows) {
    std::map<int, std::pair<AblationRow, std::size_t>> acc;
    for (const auto& r : rows) {
        auto& [m, n] = acc[r.variant];
        if (n == 0) {
            m = r;
            m.recall = 0.0;
            m.ndcg = 0.0;
            m.seed = 0;
        }
        m.recall += r.recall;
        m.ndcg += r.ndcg;
        ++n;
    }
    std::vector<AblationRow> out;
    for (auto& [id, mn] : acc) {
        auto& [m, n] = mn;
        m.recall /= static_cast<double>(n);
        m.ndcg /= static_cast<double>(n);
        out.push_back(m);
    }
    return out;
}

void write_ablation_csv(const std::filesystem::path& path, std::span<const AblationRow> rows,
                        std::span<const AblationRow> means, const std::string& header) {
    io::atomic_write(path, [&](std::ostream& out) {
        out << header << "variant,label,seed,K,recall,ndcg\n" << std::setprecision(17);
        for (const auto& r : rows)
            out << r.variant << ',' << r.label << ',' << r.seed << ',' << r.k << ',' << r.recall << ',' << r.ndcg << '\n';
        for (const auto& r : means)
            out << r.variant << ',' << r.label << ",mean," << r.k << ',' << r.recall << ',' << r.ndcg << '\n';
    });
}

std::vector<CaseStudyRow> case_study(const ModelState& state, const InteractionDataset& ds, const FoldSplit& fold,
                                     std::span<const std::string> item_labels, std::size_t n_users,
                                     std::size_t per_user, std::uint64_t seed) {
    const auto slot = relation_slot(Relation::UserItem);
    if (!state.margins.adaptive[slot]) throw InputError("case study needs a model with an adaptive user-item margin");
    if (item_labels.size() != ds.n_items) throw InputError("case study: item labels do not cover the catalogue");

    std::mt19937_64 rng(seed);
    std::vector<Index> users(ds.n_users);
    for (std::size_t u = 0; u < users.size(); ++u) users[u] = static_cast<Index>(u);
    std::shuffle(users.begin(), users.end(), rng);
    users.resize(std::min(n_users, users.size()));
    std::sort(users.begin(), users.end());

    TripletBatch batch;
    batch.relation = Relation::UserItem;
    std::vector<CaseStudyRow> rows;
    for (auto u : users) {
        const auto& train = fold.train[u];
        std::vector<Index> pos(train.begin(), train.end());
        std::shuffle(pos.begin(), pos.end(), rng);
        std::size_t taken = 0;
        for (auto p : pos) {
            if (taken == per_user) break;
            const auto& label = item_labels[p];
            if (label.empty()) continue;
            std::vector<Index> same, other;
            for (std::size_t j = 0; j < ds.n_items; ++j) {
                if (j == p || item_labels[j].empty() || std::binary_search(train.begin(), train.end(), j)) continue;
                (item_labels[j] == label ? same : other).push_back(static_cast<Index>(j));
            }
            if (same.empty() || other.empty()) continue;
            const auto s = same[std::uniform_int_distribution<std::size_t>(0, same.size() - 1)(rng)];
            const auto o = other[std::uniform_int_distribution<std::size_t>(0, other.size() - 1)(rng)];
            batch.anchors.insert(batch.anchors.end(), {u, u});
            batch.positives.insert(batch.positives.end(), {p, p});
            batch.negatives.insert(batch.negatives.end(), {s, o});
            rows.push_back({ds.user_ids[u], ds.item_ids[p], label, ds.item_ids[s], ds.item_ids[o], item_labels[o], 0, 0});
            ++taken;
        }
    }
    // No noise block: the margin network sees the mean embeddings.
    const auto margins = batch_margins(batch, state.theta, state.margins.margin(Relation::UserItem),
                                       DistanceKind::EuclideanSquared);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        rows[r].margin_similar = margins[2 * r];
        rows[r].margin_dissimilar = margins[2 * r + 1];
    }
    return rows;
}

CaseStudySummary summarize(std::span<const CaseStudyRow> rows) {
    CaseStudySummary s;
    s.rows = rows.size();
    for (const auto& r : rows) {
        s.mean_similar += r.margin_similar;
        s.mean_dissimilar += r.margin_dissimilar;
    }
    if (!rows.empty()) {
        s.mean_similar /= static_cast<double>(rows.size());
        s.mean_dissimilar /= static_cast<double>(rows.size());
    }
    return s;
}

void write_case_study_csv(const std::filesystem::path& path, std::span<const CaseStudyRow> rows,
                          const std::string& header) {
    io::atomic_write(path, [&](std::ostream& out) {
        out << header << "user,positive,label,similar_negative,margin_similar,dissimilar_negative,dissimilar_label,"
                         "margin_dissimilar\n"
            << std::setprecision(17);
        for (const auto& r : rows)
            out << r.user << ',' << r.positive << ',' << r.positive_label << ',' << r.similar << ','
                << r.margin_similar << ',' << r.dissimilar << ',' << r.dissimilar_label << ','
                << r.margin_dissimilar << '\n';
    });
}

}  // namespace pmlam
