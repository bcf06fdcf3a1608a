// SPDX-License-Identifier: Apache-2.0

#include "pmlam/embeddings.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pmlam {

namespace {

double norm2(std::span<const double> v) {
    return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

template <class F>
void for_each_array(Theta& y, const Theta& x, F f) {
    f(y.users.mu, x.users.mu);
    f(y.users.sigma, x.users.sigma);
    f(y.items.mu, x.items.mu);
    f(y.items.sigma, x.items.sigma);
}

}  // namespace

GaussianEmbeddingTable init_table(std::size_t n_entities, std::size_t h, std::uint64_t seed, double mu_std,
                                  double sigma0) {
    if (h < 1) throw std::invalid_argument("embedding dimension must be >= 1");
    GaussianEmbeddingTable t(n_entities, h);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, mu_std);
    for (auto& x : t.mu) x = normal(rng);
    std::fill(t.sigma.begin(), t.sigma.end(), sigma0);
    project(t);
    return t;
}

SampledEmbedding sample(const GaussianEmbeddingTable& table, Index index, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> noise(table.dim);
    for (auto& e : noise) e = normal(rng);
    return sample_with_noise(table, index, noise);
}

SampledEmbedding sample_with_noise(const GaussianEmbeddingTable& table, Index index, std::span<const double> noise) {
    if (index >= table.rows) throw std::out_of_range("embedding index out of range");
    if (noise.size() != table.dim) throw std::invalid_argument("noise dimension mismatch");
    SampledEmbedding s;
    s.noise.assign(noise.begin(), noise.end());
    s.value.resize(table.dim);
    const auto mu = table.mu_row(index);
    const auto sigma = table.sigma_row(index);
    for (std::size_t d = 0; d < table.dim; ++d) s.value[d] = mu[d] + std::sqrt(sigma[d]) * noise[d];
    return s;
}

void project(GaussianEmbeddingTable& table) {
    for (std::size_t i = 0; i < table.rows; ++i) {
        auto mu = table.mu_row(i);
        const double mn = norm2(mu);
        if (mn > 1.0) {
            for (auto& x : mu) x /= mn;
        }
        auto sigma = table.sigma_row(i);
        for (auto& s : sigma) s = std::clamp(s, kSigmaMin, 1.0);
        const double sn = norm2(sigma);
        if (sn > 1.0) {
            for (auto& s : sigma) s /= sn;
        }
    }
}

double sigma_floor(std::size_t dim) { return kSigmaMin / std::sqrt(static_cast<double>(std::max<std::size_t>(dim, 1))); }

void clamp_sigma_floor(GaussianEmbeddingTable& table) {
    const double floor = sigma_floor(table.dim);
    for (auto& s : table.sigma) s = std::max(s, floor);
}

bool satisfies_invariants(const GaussianEmbeddingTable& table, double tol) {
    for (std::size_t i = 0; i < table.rows; ++i) {
        const auto mu = table.mu_row(i);
        const auto sigma = table.sigma_row(i);
        if (!std::all_of(mu.begin(), mu.end(), [](double x) { return std::isfinite(x); })) return false;
        if (norm2(mu) > 1.0 + tol || norm2(sigma) > 1.0 + tol) return false;
        // Renormalising after the clamp can scale an entry below kSigmaMin by at most sqrt(h).
        const double floor = sigma_floor(table.dim);
        for (double s : sigma) {
            if (!std::isfinite(s) || s < floor - tol || s > 1.0 + tol)
                return false;
        }
    }
    return true;
}

Theta zeros_like(const Theta& t) {
    return Theta{GaussianEmbeddingTable(t.users.rows, t.users.dim), GaussianEmbeddingTable(t.items.rows, t.items.dim)};
}

void axpy(Theta& y, double a, const Theta& x) {
    for_each_array(y, x, [a](std::vector<double>& yv, const std::vector<double>& xv) {
        for (std::size_t k = 0; k < yv.size(); ++k) yv[k] += a * xv[k];
    });
}

double dot(const Theta& a, const Theta& b) {
    double s = 0.0;
    auto acc = [&s](const std::vector<double>& x, const std::vector<double>& y) {
        s += std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
    };
    acc(a.users.mu, b.users.mu);
    acc(a.users.sigma, b.users.sigma);
    acc(a.items.mu, b.items.mu);
    acc(a.items.sigma, b.items.sigma);
    return s;
}

double squared_norm(const Theta& t) { return dot(t, t); }

bool all_finite(const Theta& t) {
    auto ok = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
    };
    return ok(t.users.mu) && ok(t.users.sigma) && ok(t.items.mu) && ok(t.items.sigma);
}

void fill_zero(Theta& t) {
    for (auto* v : {&t.users.mu, &t.users.sigma, &t.items.mu, &t.items.sigma}) std::fill(v->begin(), v->end(), 0.0);
}

}  // namespace pmlam
