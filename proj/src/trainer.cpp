// SPDX-License-Identifier: Apache-2.0

#include "pmlam/trainer.h"

#include <algorithm>
#include <iomanip>

#include "pmlam/io.h"
#include "pmlam/sampler.h"

namespace pmlam {

std::pair<NeighborSets, NeighborSets> fold_neighbors(const RunConfig& cfg, const FoldSplit& fold, std::size_t n_items) {
    NeighborSets users, items;
    users.kind = EntityKind::User;
    items.kind = EntityKind::Item;
    if (cfg.has(Relation::UserUser)) users = build_neighbors(fold.train, n_items, cfg.sim_threshold, EntityKind::User);
    if (cfg.has(Relation::ItemItem))
        items = build_neighbors(transpose_rows(fold.train, n_items), fold.train.size(), cfg.sim_threshold,
                                EntityKind::Item);
    return {std::move(users), std::move(items)};
}

TrainResult train(const RunConfig& cfg, ModelState& state, const FoldSplit& fold, std::size_t n_items,
                  const NeighborSets& user_neighbors, const NeighborSets& item_neighbors, const TrainHooks& hooks) {
    validate(cfg);
    TrainResult result;
    if (state.epochs_done >= cfg.epochs) return result;

    SamplerSettings ss;
    ss.batch_size = cfg.batch_size;
    ss.neg_samples = cfg.neg_samples;
    ss.pool_size = cfg.pool_size;
    ss.refresh_period = cfg.refresh_period;
    ss.relations = cfg.relations;
    ss.seed = cfg.seed;
    TripletSampler sampler(fold.train, n_items, user_neighbors, item_neighbors, ss);

    const auto settings = bilevel_settings(cfg);
    const bool noisy = cfg.distance_kind == DistanceKind::W2Squared;
    const std::size_t watch_k =
        std::find(cfg.ks.begin(), cfg.ks.end(), 10) != cfg.ks.end() ? 10 : cfg.ks.front();
    double best = -1.0;
    std::size_t stale = 0;

    while (state.epochs_done < cfg.epochs) {
        auto plan = sampler.plan_epoch(state.epochs_done, state.rng);
        for (auto& set : plan) {
            for (std::size_t slot = 0; slot < 3; ++slot) {
                if (noisy && state.margins.adaptive[slot] && set[slot].size() > 0)
                    fill_noise(set[slot], cfg.h, state.rng);
            }
        }

        TraceRow row;
        for (std::size_t b = 0; b < plan.size(); ++b) {
            IterationReport rep;
            if (cfg.optimization == Optimization::Joint) {
                rep = joint_iteration(state.theta, state.margins, plan[b], settings, state.theta_opt, state.phi_opts);
            } else {
                const BatchSet* outer = cfg.outer_batch == OuterBatch::Fresh ? &plan[(b + 1) % plan.size()] : nullptr;
                rep = bilevel_iteration(state.theta, state.margins, plan[b], settings, state.theta_opt,
                                        state.phi_opts, outer);
            }
            row.inner += rep.inner;
            row.outer += rep.outer;
            row.ui += rep.relations[0].inner_value;
            row.uu += rep.relations[1].inner_value;
            row.ii += rep.relations[2].inner_value;
            row.mean_margin += rep.mean_margin;
        }
        const auto n = static_cast<double>(plan.size());
        row.inner /= n;
        row.outer /= n;
        row.ui /= n;
        row.uu /= n;
        row.ii /= n;
        row.mean_margin /= n;
        row.epoch = ++state.epochs_done;
        result.trace.push_back(row);
        if (hooks.on_epoch) hooks.on_epoch(row);

        if (cfg.eval_every > 0 && state.epochs_done % cfg.eval_every == 0) {
            auto report = evaluate(state.theta, fold, cfg.ks, cfg.distance_kind);
            if (hooks.on_eval) hooks.on_eval(state.epochs_done, report);
            const double score = report.recall_at(watch_k);
            result.evals.emplace_back(state.epochs_done, std::move(report));
            if (score > best) {
                best = score;
                stale = 0;
            } else if (cfg.early_stop_patience > 0 && ++stale >= cfg.early_stop_patience) {
                result.early_stopped = true;
                break;
            }
        }
    }
    return result;
}

void write_trace_csv(const std::filesystem::path& path, std::span<const TraceRow> trace, const std::string& header) {
    io::atomic_write(path, [&](std::ostream& out) {
        out << header << "epoch,inner,outer,ui,uu,ii,mean_margin\n" << std::setprecision(17);
        for (const auto& r : trace)
            out << r.epoch << ',' << r.inner << ',' << r.outer << ',' << r.ui << ',' << r.uu << ',' << r.ii << ','
                << r.mean_margin << '\n';
    });
}

}  // namespace pmlam
