// SPDX-License-Identifier: Apache-2.0

#include "pmlam/margin_net.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pmlam {

double MarginNetParams::squared_norm() const {
    return std::inner_product(values.begin(), values.end(), values.begin(), 0.0);
}

MarginNetParams init_margin_net(std::size_t input_dim, std::size_t hidden, std::mt19937_64& rng) {
    if (input_dim == 0 || hidden == 0) throw std::invalid_argument("margin net dimensions must be positive");
    MarginNetParams p(input_dim, hidden);
    const double a1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
    const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    std::uniform_real_distribution<double> u1(-a1, a1), u2(-a2, a2);
    for (auto& w : p.w1()) w = u1(rng);
    for (auto& w : p.w2()) w = u2(rng);
    return p;
}

std::size_t indicator_dim(IndicatorMode mode, std::size_t h) { return mode == IndicatorMode::Sum ? h : 3 * h; }

IndicatorFeatures indicator(std::span<const double> u, std::span<const double> v_pos, std::span<const double> v_neg) {
    IndicatorFeatures f;
    f.s.resize(3 * u.size());
    build_indicator(IndicatorMode::Gap, u, v_pos, v_neg, f.s);
    return f;
}

void build_indicator(IndicatorMode mode, std::span<const double> u, std::span<const double> v_pos,
                     std::span<const double> v_neg, std::span<double> out) {
    const auto h = u.size();
    if (v_pos.size() != h || v_neg.size() != h) throw std::invalid_argument("indicator: dimension mismatch");
    if (out.size() != indicator_dim(mode, h)) throw std::invalid_argument("indicator: output size mismatch");
    switch (mode) {
        case IndicatorMode::Gap:
            for (std::size_t d = 0; d < h; ++d) {
                const double dp = u[d] - v_pos[d];
                const double dn = u[d] - v_neg[d];
                out[d] = dp * dp;
                out[h + d] = dn * dn;
                out[2 * h + d] = out[h + d] - out[d];
            }
            break;
        case IndicatorMode::Concat:
            for (std::size_t d = 0; d < h; ++d) {
                out[d] = u[d];
                out[h + d] = v_pos[d];
                out[2 * h + d] = v_neg[d];
            }
            break;
        case IndicatorMode::Sum:
            for (std::size_t d = 0; d < h; ++d) out[d] = u[d] + v_pos[d] + v_neg[d];
            break;
    }
}

void indicator_backward(IndicatorMode mode, std::span<const double> u, std::span<const double> v_pos,
                        std::span<const double> v_neg, std::span<const double> grad_s, std::span<double> grad_u,
                        std::span<double> grad_v_pos, std::span<double> grad_v_neg) {
    const auto h = u.size();
    switch (mode) {
        case IndicatorMode::Gap:
            for (std::size_t d = 0; d < h; ++d) {
                const double g_chi_pos = grad_s[d] - grad_s[2 * h + d];
                const double g_chi_neg = grad_s[h + d] + grad_s[2 * h + d];
                const double tp = 2.0 * (u[d] - v_pos[d]) * g_chi_pos;
                const double tn = 2.0 * (u[d] - v_neg[d]) * g_chi_neg;
                grad_u[d] += tp + tn;
                grad_v_pos[d] -= tp;
                grad_v_neg[d] -= tn;
            }
            break;
        case IndicatorMode::Concat:
            for (std::size_t d = 0; d < h; ++d) {
                grad_u[d] += grad_s[d];
                grad_v_pos[d] += grad_s[h + d];
                grad_v_neg[d] += grad_s[2 * h + d];
            }
            break;
        case IndicatorMode::Sum:
            for (std::size_t d = 0; d < h; ++d) {
                grad_u[d] += grad_s[d];
                grad_v_pos[d] += grad_s[d];
                grad_v_neg[d] += grad_s[d];
            }
            break;
    }
}

double softplus(double x) {
    // log(1 + e^x) = max(x, 0) + log1p(e^-|x|)
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double forward(const MarginNetParams& p, std::span<const double> s, MarginCache& cache) {
    if (s.size() != p.input_dim) throw std::invalid_argument("margin net: input size mismatch");
    const auto w1 = p.w1();
    const auto b1 = p.b1();
    const auto w2 = p.w2();
    cache.z.resize(p.hidden);
    double pre = p.b2();
    for (std::size_t k = 0; k < p.hidden; ++k) {
        const double* row = w1.data() + k * p.input_dim;
        double a = b1[k];
        for (std::size_t c = 0; c < p.input_dim; ++c) a += row[c] * s[c];
        cache.z[k] = std::tanh(a);
        pre += w2[k] * cache.z[k];
    }
    cache.pre = pre;
    cache.margin = softplus(pre);
    return cache.margin;
}

void backward(const MarginNetParams& p, std::span<const double> s, const MarginCache& cache, double upstream,
              std::span<double> grad_params, std::span<double> grad_s) {
    if (upstream == 0.0) return;
    const double g_pre = upstream * sigmoid(cache.pre);
    const auto w1 = p.w1();
    const auto w2 = p.w2();
    const std::size_t off_b1 = p.hidden * p.input_dim;
    const std::size_t off_w2 = off_b1 + p.hidden;
    if (!grad_params.empty()) grad_params[grad_params.size() - 1] += g_pre;
    for (std::size_t k = 0; k < p.hidden; ++k) {
        const double z = cache.z[k];
        const double g_a = g_pre * w2[k] * (1.0 - z * z);
        if (!grad_params.empty()) {
            grad_params[off_w2 + k] += g_pre * z;
            grad_params[off_b1 + k] += g_a;
            double* gw = grad_params.data() + k * p.input_dim;
            for (std::size_t c = 0; c < p.input_dim; ++c) gw[c] += g_a * s[c];
        }
        if (!grad_s.empty()) {
            const double* row = w1.data() + k * p.input_dim;
            for (std::size_t c = 0; c < p.input_dim; ++c) grad_s[c] += g_a * row[c];
        }
    }
}

}  // namespace pmlam
