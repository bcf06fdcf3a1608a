// SPDX-License-Identifier: Apache-2.0

#include "pmlam/bilevel.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pmlam {

namespace {

bool finite_all(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

[[noreturn]] void numeric_failure(const std::string& what, const BatchSet& batches) {
    std::ostringstream os;
    os << "non-finite " << what;
    for (const auto& b : batches) {
        if (b.size() > 0) os << "\n" << describe_batch(b);
    }
    throw NumericError(os.str());
}

double mean_margin_of(const std::array<LossReport, 3>& reps, const MarginSet& margins) {
    double sum = 0.0;
    std::size_t rows = 0;
    const bool only_adaptive = margins.any_adaptive();
    for (auto r : kAllRelations) {
        const auto slot = relation_slot(r);
        if (only_adaptive && !margins.adaptive[slot]) continue;
        sum += reps[slot].mean_margin * static_cast<double>(reps[slot].rows);
        rows += reps[slot].rows;
    }
    return rows == 0 ? 0.0 : sum / static_cast<double>(rows);
}

Theta perturbed(const Theta& theta, double step, const Theta& v) {
    Theta out = theta;
    axpy(out, step, v);
    clamp_sigma_floor(out.users);
    clamp_sigma_floor(out.items);
    return out;
}

}  // namespace

RelationMargin MarginSet::margin(Relation r) const {
    const auto slot = relation_slot(r);
    RelationMargin m;
    m.fixed = fixed[slot];
    m.mode = mode;
    if (adaptive[slot]) m.net = &nets[slot];
    return m;
}

std::array<const MarginNetParams*, 3> MarginSet::adaptive_nets() const {
    std::array<const MarginNetParams*, 3> out{};
    for (std::size_t k = 0; k < 3; ++k) out[k] = adaptive[k] ? &nets[k] : nullptr;
    return out;
}

std::array<LossReport, 3> inner_gradients(const Theta& theta, const BatchSet& batches, const MarginSet& margins,
                                          DistanceKind kind, Theta* distance, Theta* margin_path,
                                          const std::array<std::span<double>, 3>& phi) {
    std::array<LossReport, 3> reps;
    for (auto r : kAllRelations) {
        const auto slot = relation_slot(r);
        const auto& batch = batches[slot];
        reps[slot].relation = r;
        if (batch.size() == 0) continue;
        if (batch.relation != r) throw std::invalid_argument("batch set: relation stored in the wrong slot");
        InnerGradients g;
        g.distance = distance;
        g.margin_path = margin_path;
        g.phi = phi[slot];
        reps[slot] = batch_inner(batch, theta, margins.margin(r), kind, g);
    }
    return reps;
}

std::array<LossReport, 3> theta_step(Theta& theta, const BatchSet& batches, const MarginSet& margins,
                                     const BilevelSettings& settings, ThetaOptimizer& opt) {
    Theta grad = zeros_like(theta);
    auto reps = inner_gradients(theta, batches, margins, settings.kind, &grad,
                                settings.margin_grad_to_theta ? &grad : nullptr);
    if (!all_finite(grad)) numeric_failure("theta gradient", batches);
    opt.step(theta, grad);
    project(theta.users);
    project(theta.items);
    return reps;
}

Theta build_proxy(const Theta& theta, const BatchSet& batches, const MarginSet& margins,
                  const BilevelSettings& settings) {
    Theta grad = zeros_like(theta);
    inner_gradients(theta, batches, margins, settings.kind, &grad, &grad);
    if (!all_finite(grad)) numeric_failure("proxy gradient", batches);
    Theta proxy = theta;
    axpy(proxy, -settings.alpha, grad);
    clamp_sigma_floor(proxy.users);
    clamp_sigma_floor(proxy.items);
    return proxy;
}

std::vector<double> central_difference_hypergradient(
    double alpha, double eps_fd, double v_norm, std::size_t phi_size,
    const std::function<std::vector<double>(double step)>& phi_grad_at) {
    if (!(eps_fd > 0.0)) throw std::invalid_argument("eps_fd must be > 0");
    std::vector<double> out(phi_size, 0.0);
    if (!(v_norm > 0.0)) return out;
    const double e = eps_fd / v_norm;
    const auto plus = phi_grad_at(e);
    const auto minus = phi_grad_at(-e);
    if (plus.size() != phi_size || minus.size() != phi_size)
        throw std::invalid_argument("hypergradient: phi gradient has wrong size");
    for (std::size_t k = 0; k < phi_size; ++k) out[k] = -alpha * (plus[k] - minus[k]) / (2.0 * e);
    return out;
}

Hypergradient phi_hypergradient(const Theta& theta, const Theta& proxy, const BatchSet& batches,
                                const MarginSet& margins, const BilevelSettings& settings,
                                const BatchSet* outer_batches) {
    const BatchSet& ob = outer_batches ? *outer_batches : batches;
    Hypergradient hg;
    Theta v = zeros_like(theta);
    for (auto r : kAllRelations) {
        const auto slot = relation_slot(r);
        hg.outer_reports[slot].relation = r;
        if (ob[slot].size() == 0) continue;
        hg.outer_reports[slot] = batch_outer(ob[slot], proxy, settings.kind, &v);
        hg.outer += hg.outer_reports[slot].outer_value;
    }
    if (!all_finite(v)) numeric_failure("outer gradient", ob);
    hg.v_norm = std::sqrt(squared_norm(v));

    for (auto r : kAllRelations) {
        const auto slot = relation_slot(r);
        if (!margins.adaptive[slot] || batches[slot].size() == 0) continue;
        const auto& batch = batches[slot];
        const auto margin = margins.margin(r);
        const auto n_phi = margins.nets[slot].values.size();
        hg.phi[slot] = central_difference_hypergradient(
            settings.alpha, settings.eps_fd, hg.v_norm, n_phi, [&](double step) {
                const Theta shifted = perturbed(theta, step, v);
                std::vector<double> g(n_phi, 0.0);
                InnerGradients ig;
                ig.phi = g;
                batch_inner(batch, shifted, margin, settings.kind, ig);
                return g;
            });
        if (!finite_all(hg.phi[slot])) numeric_failure("phi hypergradient", batches);
    }
    return hg;
}

void phi_step(MarginSet& margins, std::array<std::vector<double>, 3> grads, double lambda,
              std::array<OptimizerState, 3>& opts) {
    for (std::size_t slot = 0; slot < 3; ++slot) {
        if (!margins.adaptive[slot]) continue;
        auto& values = margins.nets[slot].values;
        auto& g = grads[slot];
        if (g.empty()) g.assign(values.size(), 0.0);
        if (g.size() != values.size()) throw std::invalid_argument("phi_step: gradient size mismatch");
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += 2.0 * lambda * values[k];
        if (!finite_all(g)) throw NumericError("non-finite phi gradient in relation " +
                                               std::string(to_string(static_cast<Relation>(slot))));
        opts[slot].step(values, g);
        if (!finite_all(values)) throw NumericError("non-finite phi after update");
    }
}

IterationReport bilevel_iteration(Theta& theta, MarginSet& margins, const BatchSet& batches,
                                  const BilevelSettings& settings, ThetaOptimizer& theta_opt,
                                  std::array<OptimizerState, 3>& phi_opts, const BatchSet* outer_batches) {
    IterationReport rep;
    Theta dist_grad = zeros_like(theta);
    Theta path_grad = zeros_like(theta);
    rep.relations = inner_gradients(theta, batches, margins, settings.kind, &dist_grad, &path_grad);
    if (!all_finite(dist_grad) || !all_finite(path_grad)) numeric_failure("theta gradient", batches);
    for (const auto& r : rep.relations) rep.inner += r.inner_value;
    rep.mean_margin = mean_margin_of(rep.relations, margins);

    Hypergradient hg;
    if (margins.any_adaptive()) {
        Theta proxy = theta;
        axpy(proxy, -settings.alpha, dist_grad);
        axpy(proxy, -settings.alpha, path_grad);
        clamp_sigma_floor(proxy.users);
        clamp_sigma_floor(proxy.items);
        hg = phi_hypergradient(theta, proxy, batches, margins, settings, outer_batches);
        for (std::size_t slot = 0; slot < 3; ++slot) rep.relations[slot].outer_value = hg.outer_reports[slot].outer_value;
        const auto nets = margins.adaptive_nets();
        rep.outer = combined(rep.relations, settings.lambda, nets).outer;
    }

    if (settings.margin_grad_to_theta) axpy(dist_grad, 1.0, path_grad);
    theta_opt.step(theta, dist_grad);
    project(theta.users);
    project(theta.items);

    if (margins.any_adaptive()) phi_step(margins, std::move(hg.phi), settings.lambda, phi_opts);
    return rep;
}

IterationReport joint_iteration(Theta& theta, MarginSet& margins, const BatchSet& batches,
                                const BilevelSettings& settings, ThetaOptimizer& theta_opt,
                                std::array<OptimizerState, 3>& phi_opts) {
    IterationReport rep;
    Theta grad = zeros_like(theta);
    std::array<std::vector<double>, 3> phi_grads;
    std::array<std::span<double>, 3> phi_spans;
    for (std::size_t slot = 0; slot < 3; ++slot) {
        if (!margins.adaptive[slot]) continue;
        phi_grads[slot].assign(margins.nets[slot].values.size(), 0.0);
        phi_spans[slot] = phi_grads[slot];
    }
    rep.relations = inner_gradients(theta, batches, margins, settings.kind, &grad, &grad, phi_spans);
    if (!all_finite(grad)) numeric_failure("theta gradient", batches);
    for (const auto& r : rep.relations) rep.inner += r.inner_value;
    rep.mean_margin = mean_margin_of(rep.relations, margins);

    theta_opt.step(theta, grad);
    project(theta.users);
    project(theta.items);
    phi_step(margins, std::move(phi_grads), 0.0, phi_opts);
    return rep;
}

std::string describe_batch(const TripletBatch& batch, std::size_t max_rows) {
    std::ostringstream os;
    os << "batch " << to_string(batch.relation) << " rows=" << batch.size();
    const auto n = std::min(max_rows, batch.size());
    for (std::size_t k = 0; k < n; ++k)
        os << "\n  " << batch.anchors[k] << ' ' << batch.positives[k] << ' ' << batch.negatives[k];
    if (n < batch.size()) os << "\n  ...";
    return os.str();
}

}  // namespace pmlam
