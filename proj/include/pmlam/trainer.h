// SPDX-License-Identifier: Apache-2.0
//
// The epoch loop: sampling, bilevel (or joint) iterations, loss trace,
// periodic evaluation and optional early stopping.

#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmlam/config.h"
#include "pmlam/data.h"
#include "pmlam/evaluator.h"
#include "pmlam/model.h"
#include "pmlam/simgraph.h"

namespace pmlam {

/// One line of the loss trace; values are means over the epoch's iterations.
struct TraceRow {
    std::size_t epoch = 0;  // 1-based count of completed epochs
    double inner = 0.0;
    double outer = 0.0;
    double ui = 0.0;
    double uu = 0.0;
    double ii = 0.0;
    double mean_margin = 0.0;

    bool operator==(const TraceRow&) const = default;
};

struct TrainHooks {
    std::function<void(const TraceRow&)> on_epoch;
    std::function<void(std::size_t epoch, const EvalReport&)> on_eval;
};

struct TrainResult {
    std::vector<TraceRow> trace;
    std::vector<std::pair<std::size_t, EvalReport>> evals;
    bool early_stopped = false;
};

/// Neighbor sets built from the fold's training rows; empty when the relation is off.
std::pair<NeighborSets, NeighborSets> fold_neighbors(const RunConfig& cfg, const FoldSplit& fold, std::size_t n_items);

/// Trains from state.epochs_done up to cfg.epochs.
TrainResult train(const RunConfig& cfg, ModelState& state, const FoldSplit& fold, std::size_t n_items,
                  const NeighborSets& user_neighbors, const NeighborSets& item_neighbors,
                  const TrainHooks& hooks = {});

/// CSV `epoch,inner,outer,ui,uu,ii,mean_margin` after `header`.
void write_trace_csv(const std::filesystem::path& path, std::span<const TraceRow> trace, const std::string& header = {});

}  // namespace pmlam
