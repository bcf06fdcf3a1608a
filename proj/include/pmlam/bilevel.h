// SPDX-License-Identifier: Apache-2.0
//
// Alternating bilevel updates of the embeddings (theta) and the margin
// networks (phi):
//
//   theta step : theta <- OPT(theta, grad_theta J_inner(theta, phi)), then project
//   proxy      : theta~ = theta - alpha * grad_theta J_inner(theta, phi)
//   phi step   : phi <- OPT(phi, d J_outer(theta~(phi)) / d phi + 2 lambda phi)
//
// The mixed second derivative in d J_outer / d phi is replaced by a central
// difference of first-order phi gradients along v = grad J_outer(theta~):
//
//   d J_outer / d phi ~= -alpha * [g(theta + e v) - g(theta - e v)] / (2 e),
//   g = grad_phi J_inner,  e = eps_fd / |v|

#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pmlam/embeddings.h"
#include "pmlam/losses.h"
#include "pmlam/margin_net.h"
#include "pmlam/optimizer.h"

namespace pmlam {

/// Margin source per relation. Slots with adaptive[r] == false use fixed[r]
/// and keep an empty network.
struct MarginSet {
    std::array<MarginNetParams, 3> nets;
    std::array<bool, 3> adaptive{false, false, false};
    std::array<double, 3> fixed{1.0, 1.0, 1.0};
    IndicatorMode mode = IndicatorMode::Gap;

    RelationMargin margin(Relation r) const;
    std::array<const MarginNetParams*, 3> adaptive_nets() const;
    bool any_adaptive() const { return adaptive[0] || adaptive[1] || adaptive[2]; }

    bool operator==(const MarginSet&) const = default;
};

struct BilevelSettings {
    double alpha = 1e-3;  // inner step size; also the proxy step
    double lambda = 1e-3;
    double eps_fd = 1e-2;
    DistanceKind kind = DistanceKind::W2Squared;
    bool margin_grad_to_theta = false;
};

struct IterationReport {
    std::array<LossReport, 3> relations;
    double inner = 0.0;
    double outer = 0.0;  // proxy loss plus lambda |phi|^2; zero when no relation is adaptive
    double mean_margin = 0.0;
};

/// Gradients of the summed inner objective at theta. `distance` and
/// `margin_path` may be null; `phi[r]` may be empty.
std::array<LossReport, 3> inner_gradients(const Theta& theta, const BatchSet& batches, const MarginSet& margins,
                                          DistanceKind kind, Theta* distance, Theta* margin_path,
                                          const std::array<std::span<double>, 3>& phi = {});

/// One optimizer step on the inner objective followed by projection.
/// The margin-path gradient joins the update only when margin_grad_to_theta is set.
std::array<LossReport, 3> theta_step(Theta& theta, const BatchSet& batches, const MarginSet& margins,
                                     const BilevelSettings& settings, ThetaOptimizer& opt);

/// theta - alpha * grad J_inner, where the gradient includes the path through
/// the margin network's inputs (the only place phi enters the proxy). Variances
/// are floored, never projected. Pure: theta and optimizer state are untouched.
Theta build_proxy(const Theta& theta, const BatchSet& batches, const MarginSet& margins,
                  const BilevelSettings& settings);

/// Central-difference engine shared by the scalar and model hypergradients.
/// `phi_grad_at(step)` returns grad_phi J_inner at theta + step * v.
std::vector<double> central_difference_hypergradient(
    double alpha, double eps_fd, double v_norm, std::size_t phi_size,
    const std::function<std::vector<double>(double step)>& phi_grad_at);

struct Hypergradient {
    std::array<std::vector<double>, 3> phi;  // empty for fixed relations
    double outer = 0.0;                      // summed proxy loss (without the lambda term)
    double v_norm = 0.0;
    std::array<LossReport, 3> outer_reports;
};

/// Hypergradient for every adaptive relation. `outer_batches` defaults to `batches`.
Hypergradient phi_hypergradient(const Theta& theta, const Theta& proxy, const BatchSet& batches,
                                const MarginSet& margins, const BilevelSettings& settings,
                                const BatchSet* outer_batches = nullptr);

/// Adds 2 lambda phi and applies one optimizer step per adaptive network.
void phi_step(MarginSet& margins, std::array<std::vector<double>, 3> grads, double lambda,
              std::array<OptimizerState, 3>& opts);

/// Full iteration: gradients, proxy and hypergradient are all taken at the
/// incoming theta; then theta is stepped and projected, then phi is stepped.
IterationReport bilevel_iteration(Theta& theta, MarginSet& margins, const BatchSet& batches,
                                  const BilevelSettings& settings, ThetaOptimizer& theta_opt,
                                  std::array<OptimizerState, 3>& phi_opts, const BatchSet* outer_batches = nullptr);

/// Joint minimisation of the inner objective over theta and phi together, with
/// no regulariser. Kept to demonstrate that the margins collapse toward zero.
IterationReport joint_iteration(Theta& theta, MarginSet& margins, const BatchSet& batches,
                                const BilevelSettings& settings, ThetaOptimizer& theta_opt,
                                std::array<OptimizerState, 3>& phi_opts);

/// Readable dump of a batch for numeric-failure diagnostics (first `max_rows` rows).
std::string describe_batch(const TripletBatch& batch, std::size_t max_rows = 16);

}  // namespace pmlam
