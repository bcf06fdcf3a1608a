// SPDX-License-Identifier: Apache-2.0
//
// Hinge ranking losses over sampled triplets and the batch objectives used by
// the bilevel trainer.
//
//   fixed    : [d(a,p)^2 - d(a,n)^2 + m]_+
//   adaptive : [d(a,p)^2 - d(a,n)^2 + f(a,p,n; phi)]_+
//
// J_inner is the batch mean of the adaptive (or fixed, for relations trained
// with a constant margin) loss at theta; J_outer is the batch mean of the
// fixed loss with m = 1 at the proxy parameters.

#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "pmlam/embeddings.h"
#include "pmlam/margin_net.h"
#include "pmlam/types.h"

namespace pmlam {

/// Rows of (anchor, positive, negative). Entity types follow the relation:
/// U-I = (user, item, item), U-U = (user, user, user), I-I = (item, item, item).
/// `noise` holds one standard-normal draw per row for each of the three
/// embeddings (row-major rows x 3h); empty means the means are fed to the margin net.
struct TripletBatch {
    Relation relation = Relation::UserItem;
    std::vector<Index> anchors;
    std::vector<Index> positives;
    std::vector<Index> negatives;
    std::vector<double> noise;

    std::size_t size() const { return anchors.size(); }
};

/// One batch per relation, indexed by relation_slot. An empty batch disables the relation.
using BatchSet = std::array<TripletBatch, 3>;

/// How a relation's margin is produced: a network (adaptive) or a constant.
struct RelationMargin {
    const MarginNetParams* net = nullptr;
    double fixed = 1.0;
    IndicatorMode mode = IndicatorMode::Gap;

    bool adaptive() const { return net != nullptr; }
};

struct LossReport {
    Relation relation = Relation::UserItem;
    double inner_value = 0.0;
    double outer_value = 0.0;
    std::size_t rows = 0;
    std::size_t active = 0;    // rows with a positive hinge argument
    double mean_margin = 0.0;  // mean generated (or fixed) margin over all rows
};

/// Gradient outputs of batch_inner; null/empty members are skipped.
struct InnerGradients {
    Theta* distance = nullptr;     // through the two distance terms
    Theta* margin_path = nullptr;  // through the margin network's embedding inputs
    std::span<double> phi;         // w.r.t. the margin network parameters
};

double loss_fixed(double d2_pos, double d2_neg, double m);
double loss_adaptive(double d2_pos, double d2_neg, double m_generated);

/// Distance between one anchor row and one target row of theta.
double relation_distance(const Theta& theta, Relation r, Index anchor, Index target, DistanceKind kind);

/// Generated margin for every row of the batch (fixed value for fixed relations).
std::vector<double> batch_margins(const TripletBatch& batch, const Theta& theta, const RelationMargin& margin,
                                  DistanceKind kind);

LossReport batch_inner(const TripletBatch& batch, const Theta& theta, const RelationMargin& margin, DistanceKind kind,
                       const InnerGradients& grads = {});

/// Fixed-margin (m = 1) loss at proxy parameters; gradient accumulated into `grad` when given.
LossReport batch_outer(const TripletBatch& batch, const Theta& proxy, DistanceKind kind, Theta* grad = nullptr);

struct CombinedLoss {
    double inner = 0.0;
    double outer = 0.0;
};

/// Sums the per-relation values and adds lambda * sum |phi|^2 to the outer total.
CombinedLoss combined(std::span<const LossReport> reports, double lambda,
                      std::span<const MarginNetParams* const> nets);

}  // namespace pmlam
