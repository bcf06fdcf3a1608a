// SPDX-License-Identifier: Apache-2.0
//
// Gaussian embedding tables: per-entity mean and diagonal variance vectors.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pmlam/types.h"

namespace pmlam {

/// Lower bound kept on every variance entry so that sqrt(sigma) stays differentiable.
inline constexpr double kSigmaMin = 1e-6;

/// Row-major n x h tables of means and variances.
struct GaussianEmbeddingTable {
    std::size_t rows = 0;
    std::size_t dim = 0;
    std::vector<double> mu;
    std::vector<double> sigma;

    GaussianEmbeddingTable() = default;
    GaussianEmbeddingTable(std::size_t n, std::size_t h) : rows(n), dim(h), mu(n * h, 0.0), sigma(n * h, 0.0) {}

    std::span<double> mu_row(std::size_t i) { return {mu.data() + i * dim, dim}; }
    std::span<const double> mu_row(std::size_t i) const { return {mu.data() + i * dim, dim}; }
    std::span<double> sigma_row(std::size_t i) { return {sigma.data() + i * dim, dim}; }
    std::span<const double> sigma_row(std::size_t i) const { return {sigma.data() + i * dim, dim}; }

    bool operator==(const GaussianEmbeddingTable&) const = default;
};

/// A reparameterized draw u = mu + sqrt(sigma) * noise. The noise is kept so the
/// same draw can be differentiated or replayed.
struct SampledEmbedding {
    std::vector<double> value;
    std::vector<double> noise;
};

/// Mean entries ~ N(0, mu_std^2); variances start at sigma0 and are then projected.
GaussianEmbeddingTable init_table(std::size_t n_entities, std::size_t h, std::uint64_t seed,
                                  double mu_std = 0.01, double sigma0 = 0.1);

SampledEmbedding sample(const GaussianEmbeddingTable& table, Index index, std::mt19937_64& rng);

/// Test hook and replay path: uses the given noise instead of drawing.
SampledEmbedding sample_with_noise(const GaussianEmbeddingTable& table, Index index,
                                   std::span<const double> noise);

/// Per row: mu /= max(1, |mu|); sigma = clamp(sigma, kSigmaMin, 1) / max(1, |sigma|).
void project(GaussianEmbeddingTable& table);

/// Smallest variance a projected row can hold: kSigmaMin shrunk by the norm rescale.
double sigma_floor(std::size_t dim);

/// Clamps sigma from below at sigma_floor(dim) only. Used on unprojected proxy
/// and perturbed parameters so that the W2 kernel stays inside its domain.
void clamp_sigma_floor(GaussianEmbeddingTable& table);

bool satisfies_invariants(const GaussianEmbeddingTable& table, double tol = 1e-12);

/// Theta: the two learned tables. The same shape doubles as a gradient buffer.
struct Theta {
    GaussianEmbeddingTable users;
    GaussianEmbeddingTable items;

    GaussianEmbeddingTable& table(EntityKind k) { return k == EntityKind::User ? users : items; }
    const GaussianEmbeddingTable& table(EntityKind k) const { return k == EntityKind::User ? users : items; }

    bool operator==(const Theta&) const = default;
};

Theta zeros_like(const Theta& t);
/// y += a * x, entrywise over both tables.
void axpy(Theta& y, double a, const Theta& x);
double dot(const Theta& a, const Theta& b);
double squared_norm(const Theta& t);
bool all_finite(const Theta& t);
void fill_zero(Theta& t);

}  // namespace pmlam
