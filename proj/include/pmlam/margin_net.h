// SPDX-License-Identifier: Apache-2.0
//
// Adaptive margin generator:
//   z = tanh(W1 s + b1),  m = softplus(W2 z + b2) > 0
// with s built from the (anchor, positive, negative) embeddings, and its
// reverse pass to both the parameters and the input embeddings.

#pragma once

#include <random>
#include <span>
#include <vector>

#include "pmlam/types.h"

namespace pmlam {

/// All parameters live in one flat buffer so optimizers and the hypergradient
/// treat them as a single vector. Layout: W1 (hidden x input, row-major), b1, W2, b2.
struct MarginNetParams {
    std::size_t input_dim = 0;
    std::size_t hidden = 0;
    std::vector<double> values;

    MarginNetParams() = default;
    MarginNetParams(std::size_t input, std::size_t hid)
        : input_dim(input), hidden(hid), values(hid * input + 2 * hid + 1, 0.0) {}

    std::span<double> w1() { return {values.data(), hidden * input_dim}; }
    std::span<const double> w1() const { return {values.data(), hidden * input_dim}; }
    std::span<double> b1() { return {values.data() + hidden * input_dim, hidden}; }
    std::span<const double> b1() const { return {values.data() + hidden * input_dim, hidden}; }
    std::span<double> w2() { return {values.data() + hidden * input_dim + hidden, hidden}; }
    std::span<const double> w2() const { return {values.data() + hidden * input_dim + hidden, hidden}; }
    double& b2() { return values.back(); }
    double b2() const { return values.back(); }

    double squared_norm() const;
    bool operator==(const MarginNetParams&) const = default;
};

/// W entries ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
MarginNetParams init_margin_net(std::size_t input_dim, std::size_t hidden, std::mt19937_64& rng);

std::size_t indicator_dim(IndicatorMode mode, std::size_t h);

/// Gap features: [chi(u,v+); chi(u,v-); chi(u,v-) - chi(u,v+)], chi_d(u,v) = (u_d - v_d)^2.
struct IndicatorFeatures {
    std::vector<double> s;
};

IndicatorFeatures indicator(std::span<const double> u, std::span<const double> v_pos, std::span<const double> v_neg);

/// Writes the mode's feature vector into `out` (size indicator_dim(mode, h)).
void build_indicator(IndicatorMode mode, std::span<const double> u, std::span<const double> v_pos,
                     std::span<const double> v_neg, std::span<double> out);

/// Chains dm/ds back to the three embeddings (accumulating).
void indicator_backward(IndicatorMode mode, std::span<const double> u, std::span<const double> v_pos,
                        std::span<const double> v_neg, std::span<const double> grad_s, std::span<double> grad_u,
                        std::span<double> grad_v_pos, std::span<double> grad_v_neg);

struct MarginCache {
    std::vector<double> z;  // tanh activations
    double pre = 0.0;       // W2 z + b2
    double margin = 0.0;
};

double softplus(double x);
double sigmoid(double x);

double forward(const MarginNetParams& p, std::span<const double> s, MarginCache& cache);

/// Reverse pass for one margin scaled by `upstream`. Accumulates into grad_params
/// (same layout as p.values) and grad_s; either may be empty.
void backward(const MarginNetParams& p, std::span<const double> s, const MarginCache& cache, double upstream,
              std::span<double> grad_params, std::span<double> grad_s);

}  // namespace pmlam
