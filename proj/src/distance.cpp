// SPDX-License-Identifier: Apache-2.0

#include "pmlam/distance.h"

#include <cmath>
#include <stdexcept>

namespace pmlam {

namespace {

void require_same_dim(std::size_t a, std::size_t b) {
    if (a != b) throw std::invalid_argument("distance: dimension mismatch");
}

}  // namespace

double w2_squared(std::span<const double> mu_a, std::span<const double> sigma_a, std::span<const double> mu_b,
                  std::span<const double> sigma_b) {
    const auto h = mu_a.size();
    require_same_dim(h, mu_b.size());
    require_same_dim(h, sigma_a.size());
    require_same_dim(h, sigma_b.size());
    double s = 0.0;
    for (std::size_t d = 0; d < h; ++d) {
        if (sigma_a[d] < 0.0 || sigma_b[d] < 0.0) throw std::invalid_argument("w2_squared: negative variance");
        const double dm = mu_a[d] - mu_b[d];
        const double ds = std::sqrt(sigma_a[d]) - std::sqrt(sigma_b[d]);
        s += dm * dm + ds * ds;
    }
    return s;
}

double w2_squared_sqrt(std::span<const double> mu_a, std::span<const double> sqrt_sigma_a,
                       std::span<const double> mu_b, std::span<const double> sqrt_sigma_b) {
    const auto h = mu_a.size();
    double s = 0.0;
    for (std::size_t d = 0; d < h; ++d) {
        const double dm = mu_a[d] - mu_b[d];
        const double ds = sqrt_sigma_a[d] - sqrt_sigma_b[d];
        s += dm * dm + ds * ds;
    }
    return s;
}

void w2_squared_grad(std::span<const double> mu_a, std::span<const double> sigma_a, std::span<const double> mu_b,
                     std::span<const double> sigma_b, const W2Grad& out, double scale) {
    const auto h = mu_a.size();
    require_same_dim(h, mu_b.size());
    require_same_dim(h, sigma_a.size());
    require_same_dim(h, sigma_b.size());
    for (std::size_t d = 0; d < h; ++d) {
        if (!(sigma_a[d] > 0.0) || !(sigma_b[d] > 0.0))
            throw std::invalid_argument("w2_squared_grad: variance must be positive");
        const double dm = 2.0 * (mu_a[d] - mu_b[d]);
        const double ra = std::sqrt(sigma_a[d]);
        const double rb = std::sqrt(sigma_b[d]);
        if (!out.mu_a.empty()) out.mu_a[d] += scale * dm;
        if (!out.mu_b.empty()) out.mu_b[d] -= scale * dm;
        if (!out.sigma_a.empty()) out.sigma_a[d] += scale * (1.0 - rb / ra);
        if (!out.sigma_b.empty()) out.sigma_b[d] += scale * (1.0 - ra / rb);
    }
}

double euclidean_squared(std::span<const double> a, std::span<const double> b) {
    require_same_dim(a.size(), b.size());
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double x = a[d] - b[d];
        s += x * x;
    }
    return s;
}

void euclidean_squared_grad(std::span<const double> a, std::span<const double> b, std::span<double> out_a,
                            std::span<double> out_b, double scale) {
    require_same_dim(a.size(), b.size());
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double g = scale * 2.0 * (a[d] - b[d]);
        if (!out_a.empty()) out_a[d] += g;
        if (!out_b.empty()) out_b[d] -= g;
    }
}

}  // namespace pmlam
