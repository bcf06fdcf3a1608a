// SPDX-License-Identifier: Apache-2.0

#include "pmlam/losses.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pmlam/distance.h"

namespace pmlam {

namespace {

std::vector<double> sqrt_of(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) out[k] = std::sqrt(v[k]);
    return out;
}

/// Read-only view of the tables a relation touches, with sqrt(sigma) precomputed.
struct RelationView {
    const GaussianEmbeddingTable* anchor;
    const GaussianEmbeddingTable* target;
    std::vector<double> anchor_sqrt;
    std::vector<double> target_sqrt_storage;
    const std::vector<double>* target_sqrt;
    std::size_t h;

    RelationView(const Theta& theta, Relation r, DistanceKind kind)
        : anchor(&theta.table(anchor_kind(r))), target(&theta.table(target_kind(r))), h(anchor->dim) {
        if (anchor->dim != target->dim) throw std::invalid_argument("user/item dimension mismatch");
        if (kind == DistanceKind::W2Squared) {
            anchor_sqrt = sqrt_of(anchor->sigma);
            if (anchor == target) {
                target_sqrt = &anchor_sqrt;
            } else {
                target_sqrt_storage = sqrt_of(target->sigma);
                target_sqrt = &target_sqrt_storage;
            }
        } else {
            target_sqrt = &target_sqrt_storage;
        }
    }

    std::span<const double> a_sqrt(Index i) const { return {anchor_sqrt.data() + i * h, h}; }
    std::span<const double> t_sqrt(Index i) const { return {target_sqrt->data() + i * h, h}; }

    double distance(Index a, Index t, DistanceKind kind) const {
        if (kind == DistanceKind::EuclideanSquared) return euclidean_squared(anchor->mu_row(a), target->mu_row(t));
        return w2_squared_sqrt(anchor->mu_row(a), a_sqrt(a), target->mu_row(t), t_sqrt(t));
    }
};

/// Accumulates scale * d distance(a, t) into the gradient tables.
void distance_grad(const RelationView& v, Relation r, Index a, Index t, DistanceKind kind, double scale, Theta& g) {
    auto& ga = g.table(anchor_kind(r));
    auto& gt = g.table(target_kind(r));
    const auto h = v.h;
    const auto mu_a = v.anchor->mu_row(a);
    const auto mu_t = v.target->mu_row(t);
    auto gmu_a = ga.mu_row(a);
    auto gmu_t = gt.mu_row(t);
    for (std::size_t d = 0; d < h; ++d) {
        const double dm = scale * 2.0 * (mu_a[d] - mu_t[d]);
        gmu_a[d] += dm;
        gmu_t[d] -= dm;
    }
    if (kind == DistanceKind::W2Squared) {
        const auto ra = v.a_sqrt(a);
        const auto rt = v.t_sqrt(t);
        auto gs_a = ga.sigma_row(a);
        auto gs_t = gt.sigma_row(t);
        for (std::size_t d = 0; d < h; ++d) {
            const double diff = ra[d] - rt[d];
            gs_a[d] += scale * diff / ra[d];
            gs_t[d] -= scale * diff / rt[d];
        }
    }
}

/// The embedding fed to the margin net: a reparameterized draw for Gaussian
/// embeddings with noise, otherwise the mean.
void margin_input(const GaussianEmbeddingTable& table, std::span<const double> sqrt_row, Index i,
                  std::span<const double> noise, bool use_noise, std::span<double> out) {
    const auto mu = table.mu_row(i);
    if (!use_noise) {
        std::copy(mu.begin(), mu.end(), out.begin());
        return;
    }
    for (std::size_t d = 0; d < out.size(); ++d) out[d] = mu[d] + sqrt_row[d] * noise[d];
}

/// Chains d/d(sample) into d/dmu (identity) and d/dsigma (noise / (2 sqrt(sigma))).
void chain_sample_grad(std::span<const double> g_sample, std::span<const double> sqrt_row,
                       std::span<const double> noise, bool use_noise, GaussianEmbeddingTable& g, Index i) {
    auto gmu = g.mu_row(i);
    for (std::size_t d = 0; d < gmu.size(); ++d) gmu[d] += g_sample[d];
    if (!use_noise) return;
    auto gs = g.sigma_row(i);
    for (std::size_t d = 0; d < gs.size(); ++d) gs[d] += g_sample[d] * noise[d] / (2.0 * sqrt_row[d]);
}

void check_batch(const TripletBatch& batch, const Theta& theta) {
    const auto n = batch.size();
    if (batch.positives.size() != n || batch.negatives.size() != n)
        throw std::invalid_argument("triplet batch: column lengths differ");
    const auto h = theta.users.dim;
    if (!batch.noise.empty() && batch.noise.size() != n * 3 * h)
        throw std::invalid_argument("triplet batch: noise block has wrong size");
}

}  // namespace

double loss_fixed(double d2_pos, double d2_neg, double m) {
    if (m < 0.0) throw std::invalid_argument("loss_fixed: margin must be >= 0");
    return std::max(d2_pos - d2_neg + m, 0.0);
}

double loss_adaptive(double d2_pos, double d2_neg, double m_generated) {
    if (!(m_generated > 0.0)) throw std::invalid_argument("loss_adaptive: generated margin must be > 0");
    return std::max(d2_pos - d2_neg + m_generated, 0.0);
}

double relation_distance(const Theta& theta, Relation r, Index anchor, Index target, DistanceKind kind) {
    const auto& ta = theta.table(anchor_kind(r));
    const auto& tt = theta.table(target_kind(r));
    if (kind == DistanceKind::EuclideanSquared) return euclidean_squared(ta.mu_row(anchor), tt.mu_row(target));
    return w2_squared(ta.mu_row(anchor), ta.sigma_row(anchor), tt.mu_row(target), tt.sigma_row(target));
}

std::vector<double> batch_margins(const TripletBatch& batch, const Theta& theta, const RelationMargin& margin,
                                  DistanceKind kind) {
    std::vector<double> out(batch.size(), margin.fixed);
    if (!margin.adaptive()) return out;
    check_batch(batch, theta);
    const RelationView view(theta, batch.relation, kind);
    const auto h = view.h;
    const bool use_noise = kind == DistanceKind::W2Squared && !batch.noise.empty();
    std::vector<double> u(h), vp(h), vn(h), s(indicator_dim(margin.mode, h));
    MarginCache cache;
    const std::span<const double> no_noise;
    for (std::size_t row = 0; row < batch.size(); ++row) {
        const auto a = batch.anchors[row], p = batch.positives[row], n = batch.negatives[row];
        std::span<const double> nz_a, nz_p, nz_n;
        if (use_noise) {
            const double* nz = batch.noise.data() + row * 3 * h;
            nz_a = {nz, h};
            nz_p = {nz + h, h};
            nz_n = {nz + 2 * h, h};
        }
        margin_input(*view.anchor, use_noise ? view.a_sqrt(a) : no_noise, a, nz_a, use_noise, u);
        margin_input(*view.target, use_noise ? view.t_sqrt(p) : no_noise, p, nz_p, use_noise, vp);
        margin_input(*view.target, use_noise ? view.t_sqrt(n) : no_noise, n, nz_n, use_noise, vn);
        build_indicator(margin.mode, u, vp, vn, s);
        out[row] = forward(*margin.net, s, cache);
    }
    return out;
}

LossReport batch_inner(const TripletBatch& batch, const Theta& theta, const RelationMargin& margin, DistanceKind kind,
                       const InnerGradients& grads) {
    check_batch(batch, theta);
    LossReport rep;
    rep.relation = batch.relation;
    rep.rows = batch.size();
    if (batch.size() == 0) return rep;

    const RelationView view(theta, batch.relation, kind);
    const auto h = view.h;
    const auto r = batch.relation;
    const bool adaptive = margin.adaptive();
    const bool use_noise = adaptive && kind == DistanceKind::W2Squared && !batch.noise.empty();
    const bool want_margin_path = adaptive && grads.margin_path != nullptr;
    const bool want_phi = adaptive && !grads.phi.empty();
    if (want_phi && grads.phi.size() != margin.net->values.size())
        throw std::invalid_argument("batch_inner: phi gradient buffer has wrong size");

    const double scale = 1.0 / static_cast<double>(batch.size());
    std::vector<double> u(h), vp(h), vn(h), s;
    std::vector<double> gs, gu(h), gvp(h), gvn(h);
    if (adaptive) {
        s.resize(indicator_dim(margin.mode, h));
        gs.resize(s.size());
    }
    MarginCache cache;
    const std::span<const double> no_noise;
    double sum_loss = 0.0;
    double sum_margin = 0.0;

    for (std::size_t row = 0; row < batch.size(); ++row) {
        const auto a = batch.anchors[row], p = batch.positives[row], n = batch.negatives[row];
        const double d_pos = view.distance(a, p, kind);
        const double d_neg = view.distance(a, n, kind);
        double m = margin.fixed;
        std::span<const double> nz_a, nz_p, nz_n;
        if (adaptive) {
            if (use_noise) {
                const double* nz = batch.noise.data() + row * 3 * h;
                nz_a = {nz, h};
                nz_p = {nz + h, h};
                nz_n = {nz + 2 * h, h};
            }
            margin_input(*view.anchor, use_noise ? view.a_sqrt(a) : no_noise, a, nz_a, use_noise, u);
            margin_input(*view.target, use_noise ? view.t_sqrt(p) : no_noise, p, nz_p, use_noise, vp);
            margin_input(*view.target, use_noise ? view.t_sqrt(n) : no_noise, n, nz_n, use_noise, vn);
            build_indicator(margin.mode, u, vp, vn, s);
            m = forward(*margin.net, s, cache);
        }
        sum_margin += m;
        const double arg = d_pos - d_neg + m;
        if (arg <= 0.0) continue;
        sum_loss += arg;
        ++rep.active;

        if (grads.distance) {
            distance_grad(view, r, a, p, kind, scale, *grads.distance);
            distance_grad(view, r, a, n, kind, -scale, *grads.distance);
        }
        if (want_margin_path || want_phi) {
            if (want_margin_path) std::fill(gs.begin(), gs.end(), 0.0);
            backward(*margin.net, s, cache, scale, want_phi ? grads.phi : std::span<double>{},
                     want_margin_path ? std::span<double>(gs) : std::span<double>{});
            if (want_margin_path) {
                std::fill(gu.begin(), gu.end(), 0.0);
                std::fill(gvp.begin(), gvp.end(), 0.0);
                std::fill(gvn.begin(), gvn.end(), 0.0);
                indicator_backward(margin.mode, u, vp, vn, gs, gu, gvp, gvn);
                auto& ga = grads.margin_path->table(anchor_kind(r));
                auto& gt = grads.margin_path->table(target_kind(r));
                chain_sample_grad(gu, use_noise ? view.a_sqrt(a) : no_noise, nz_a, use_noise, ga, a);
                chain_sample_grad(gvp, use_noise ? view.t_sqrt(p) : no_noise, nz_p, use_noise, gt, p);
                chain_sample_grad(gvn, use_noise ? view.t_sqrt(n) : no_noise, nz_n, use_noise, gt, n);
            }
        }
    }
    rep.inner_value = sum_loss * scale;
    rep.mean_margin = sum_margin * scale;
    return rep;
}

LossReport batch_outer(const TripletBatch& batch, const Theta& proxy, DistanceKind kind, Theta* grad) {
    check_batch(batch, proxy);
    LossReport rep;
    rep.relation = batch.relation;
    rep.rows = batch.size();
    rep.mean_margin = 1.0;
    if (batch.size() == 0) return rep;
    const RelationView view(proxy, batch.relation, kind);
    const double scale = 1.0 / static_cast<double>(batch.size());
    double sum_loss = 0.0;
    for (std::size_t row = 0; row < batch.size(); ++row) {
        const auto a = batch.anchors[row], p = batch.positives[row], n = batch.negatives[row];
        const double arg = view.distance(a, p, kind) - view.distance(a, n, kind) + 1.0;
        if (arg <= 0.0) continue;
        sum_loss += arg;
        ++rep.active;
        if (grad) {
            distance_grad(view, batch.relation, a, p, kind, scale, *grad);
            distance_grad(view, batch.relation, a, n, kind, -scale, *grad);
        }
    }
    rep.outer_value = sum_loss * scale;
    return rep;
}

CombinedLoss combined(std::span<const LossReport> reports, double lambda, std::span<const MarginNetParams* const> nets) {
    CombinedLoss c;
    for (const auto& r : reports) {
        c.inner += r.inner_value;
        c.outer += r.outer_value;
    }
    for (const auto* net : nets) {
        if (net) c.outer += lambda * net->squared_norm();
    }
    return c;
}

}  // namespace pmlam
