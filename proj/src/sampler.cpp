// SPDX-License-Identifier: Apache-2.0

#include "pmlam/sampler.h"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace pmlam {

namespace {

/// r-th element (0-based) of [0, universe) with the sorted set `skip` removed.
Index nth_outside(std::size_t r, std::span<const Index> skip) {
    std::size_t x = r;
    for (auto e : skip) {
        if (e <= x) ++x;
        else break;
    }
    return static_cast<Index>(x);
}

std::vector<Index> with_self(std::span<const Index> set, Index self) {
    std::vector<Index> out(set.begin(), set.end());
    auto it = std::lower_bound(out.begin(), out.end(), self);
    if (it == out.end() || *it != self) out.insert(it, self);
    return out;
}

std::uint64_t pool_seed(std::uint64_t seed, std::size_t epoch, std::size_t slot) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(epoch), static_cast<std::uint32_t>(slot), 0x9e3779b9u};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace

CandidatePool refresh_pool(const std::vector<std::vector<Index>>& exclusions, std::size_t universe,
                           std::size_t pool_size, bool exclude_self, std::mt19937_64& rng,
                           std::size_t epoch_of_build) {
    CandidatePool pool;
    pool.pool_size = pool_size;
    pool.epoch_of_build = epoch_of_build;
    pool.candidates.resize(exclusions.size());
    std::unordered_set<std::size_t> chosen;
    for (std::size_t a = 0; a < exclusions.size(); ++a) {
        std::vector<Index> skip_storage;
        std::span<const Index> skip = exclusions[a];
        if (exclude_self) {
            skip_storage = with_self(skip, static_cast<Index>(a));
            skip = skip_storage;
        }
        if (skip.size() > universe) throw std::invalid_argument("refresh_pool: exclusion set larger than universe");
        const std::size_t complement = universe - skip.size();
        auto& out = pool.candidates[a];
        if (complement <= pool_size) {
            out.reserve(complement);
            for (std::size_t r = 0; r < complement; ++r) out.push_back(nth_outside(r, skip));
            continue;
        }
        // Floyd's algorithm: pool_size distinct ranks out of the complement.
        chosen.clear();
        for (std::size_t j = complement - pool_size; j < complement; ++j) {
            std::uniform_int_distribution<std::size_t> pick(0, j);
            const auto t = pick(rng);
            if (!chosen.insert(t).second) chosen.insert(j);
        }
        std::vector<std::size_t> ranks(chosen.begin(), chosen.end());
        std::sort(ranks.begin(), ranks.end());
        out.reserve(ranks.size());
        // Ranks ascend, so the skip cursor only moves forward.
        std::size_t cursor = 0;
        for (auto r : ranks) {
            std::size_t x = r + cursor;
            while (cursor < skip.size() && skip[cursor] <= x) {
                ++cursor;
                x = r + cursor;
            }
            out.push_back(static_cast<Index>(x));
        }
    }
    return pool;
}

TripletBatch sample_triplets(Relation relation, std::span<const std::pair<Index, Index>> pairs,
                             const CandidatePool& pool, std::size_t neg_samples, std::mt19937_64& rng) {
    TripletBatch batch;
    batch.relation = relation;
    batch.anchors.reserve(pairs.size() * neg_samples);
    batch.positives.reserve(pairs.size() * neg_samples);
    batch.negatives.reserve(pairs.size() * neg_samples);
    for (const auto& [a, p] : pairs) {
        if (a >= pool.candidates.size()) throw std::invalid_argument("sample_triplets: anchor outside pool");
        const auto& cands = pool.candidates[a];
        if (cands.empty()) continue;
        std::uniform_int_distribution<std::size_t> pick(0, cands.size() - 1);
        for (std::size_t k = 0; k < neg_samples; ++k) {
            batch.anchors.push_back(a);
            batch.positives.push_back(p);
            batch.negatives.push_back(cands[pick(rng)]);
        }
    }
    return batch;
}

bool batch_membership_ok(const TripletBatch& batch, const std::vector<std::vector<Index>>& positive_sets) {
    const bool same_type = batch.relation != Relation::UserItem;
    for (std::size_t k = 0; k < batch.size(); ++k) {
        const auto a = batch.anchors[k];
        if (a >= positive_sets.size()) return false;
        const auto& set = positive_sets[a];
        if (!std::binary_search(set.begin(), set.end(), batch.positives[k])) return false;
        if (std::binary_search(set.begin(), set.end(), batch.negatives[k])) return false;
        if (same_type && (batch.negatives[k] == a || batch.positives[k] == a)) return false;
    }
    return true;
}

void fill_noise(TripletBatch& batch, std::size_t h, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    batch.noise.resize(batch.size() * 3 * h);
    for (auto& x : batch.noise) x = normal(rng);
}

TripletSampler::TripletSampler(std::vector<std::vector<Index>> train, std::size_t n_items,
                               NeighborSets user_neighbors, NeighborSets item_neighbors, SamplerSettings settings)
    : train_(std::move(train)),
      n_users_(train_.size()),
      n_items_(n_items),
      user_nbrs_(std::move(user_neighbors)),
      item_nbrs_(std::move(item_neighbors)),
      settings_(settings) {
    if (settings_.neg_samples < 1) throw std::invalid_argument("neg_samples must be >= 1");
    if (settings_.pool_size < settings_.neg_samples) throw std::invalid_argument("pool_size must be >= neg_samples");
    if (settings_.refresh_period < 1) throw std::invalid_argument("refresh_period must be >= 1");
    for (std::size_t u = 0; u < n_users_; ++u) {
        for (auto i : train_[u]) ui_pairs_.emplace_back(static_cast<Index>(u), i);
    }
    edges_[0] = ui_pairs_;
    const std::array<const NeighborSets*, 2> nbrs{&user_nbrs_, &item_nbrs_};
    for (std::size_t k = 0; k < 2; ++k) {
        if (!settings_.relations[k + 1]) continue;
        const auto& sets = nbrs[k]->neighbors;
        for (std::size_t a = 0; a < sets.size(); ++a) {
            for (auto p : sets[a]) edges_[k + 1].emplace_back(static_cast<Index>(a), p);
        }
    }
    if (settings_.relations[1] && user_nbrs_.size() != n_users_)
        throw std::invalid_argument("user neighbor sets do not match the user count");
    if (settings_.relations[2] && item_nbrs_.size() != n_items_)
        throw std::invalid_argument("item neighbor sets do not match the item count");
}

TripletSampler::~TripletSampler() {
    if (pending_.valid()) pending_.wait();
}

const std::vector<std::vector<Index>>& TripletSampler::positive_sets(Relation r) const {
    switch (r) {
        case Relation::UserItem: return train_;
        case Relation::UserUser: return user_nbrs_.neighbors;
        case Relation::ItemItem: return item_nbrs_.neighbors;
    }
    return train_;
}

std::size_t TripletSampler::build_epoch_for(std::size_t epoch) const {
    return epoch - epoch % settings_.refresh_period;
}

std::array<CandidatePool, 3> TripletSampler::build_pools(std::size_t build_epoch) const {
    std::array<CandidatePool, 3> out;
    for (auto r : kAllRelations) {
        const auto slot = relation_slot(r);
        if (!settings_.relations[slot]) continue;
        std::mt19937_64 rng(pool_seed(settings_.seed, build_epoch, slot));
        const std::size_t universe = r == Relation::UserUser ? n_users_ : n_items_;
        if (r == Relation::UserItem) {
            out[slot] = refresh_pool(train_, universe, settings_.pool_size, false, rng, build_epoch);
        } else {
            // Isolated entities never anchor a triplet, so they get no pool.
            const auto& sets = positive_sets(r);
            CandidatePool pool = refresh_pool(sets, universe, settings_.pool_size, true, rng, build_epoch);
            for (std::size_t a = 0; a < sets.size(); ++a) {
                if (sets[a].empty()) pool.candidates[a].clear();
            }
            out[slot] = std::move(pool);
        }
    }
    return out;
}

std::vector<BatchSet> TripletSampler::plan_epoch(std::size_t epoch, std::mt19937_64& rng) {
    const auto build_epoch = build_epoch_for(epoch);
    if (!have_pools_ || pools_[0].epoch_of_build != build_epoch) {
        if (pending_.valid() && pending_epoch_ == build_epoch) {
            pools_ = pending_.get();
        } else {
            if (pending_.valid()) pending_.wait();
            pending_ = {};
            pools_ = build_pools(build_epoch);
        }
        have_pools_ = true;
        // Build the next generation while this one is in use.
        if (settings_.background_refresh) {
            pending_epoch_ = build_epoch + settings_.refresh_period;
            pending_ = std::async(std::launch::async, [this, e = pending_epoch_] { return build_pools(e); });
        }
    }

    std::vector<std::pair<Index, Index>> ui = ui_pairs_;
    std::shuffle(ui.begin(), ui.end(), rng);
    const std::size_t rows = ui.size() * settings_.neg_samples;
    const std::size_t n_batches = std::max<std::size_t>(1, (rows + settings_.batch_size - 1) / settings_.batch_size);

    std::array<std::vector<std::pair<Index, Index>>, 3> draws;
    draws[0] = std::move(ui);
    for (std::size_t slot = 1; slot < 3; ++slot) {
        if (!settings_.relations[slot] || edges_[slot].empty()) continue;
        std::uniform_int_distribution<std::size_t> pick(0, edges_[slot].size() - 1);
        draws[slot].resize(draws[0].size());
        for (auto& e : draws[slot]) e = edges_[slot][pick(rng)];
    }

    std::vector<BatchSet> plan(n_batches);
    for (std::size_t b = 0; b < n_batches; ++b) {
        for (auto r : kAllRelations) {
            const auto slot = relation_slot(r);
            const auto& d = draws[slot];
            const std::size_t lo = d.size() * b / n_batches;
            const std::size_t hi = d.size() * (b + 1) / n_batches;
            if (d.empty()) {
                plan[b][slot].relation = r;
                continue;
            }
            plan[b][slot] = sample_triplets(r, std::span(d).subspan(lo, hi - lo), pools_[slot],
                                            settings_.neg_samples, rng);
        }
    }
    return plan;
}

}  // namespace pmlam
