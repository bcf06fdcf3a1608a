// SPDX-License-Identifier: Apache-2.0

#include "pmlam/optimizer.h"

#include <cmath>
#include <stdexcept>

namespace pmlam {

void OptimizerState::step(std::span<double> params, std::span<const double> grad) {
    if (params.size() != grad.size()) throw std::invalid_argument("optimizer: gradient size mismatch");
    ++t;
    if (kind == OptimizerKind::Sgd) {
        for (std::size_t k = 0; k < params.size(); ++k) params[k] -= step_size * grad[k];
        return;
    }
    if (m.empty()) {
        m.assign(params.size(), 0.0);
        v.assign(params.size(), 0.0);
    }
    if (m.size() != params.size()) throw std::invalid_argument("optimizer: state size mismatch");
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t k = 0; k < params.size(); ++k) {
        m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
        v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
        const double m_hat = m[k] / bc1;
        const double v_hat = v[k] / bc2;
        params[k] -= step_size * m_hat / (std::sqrt(v_hat) + epsilon);
    }
}

OptimizerState make_optimizer(OptimizerKind kind, double step_size) {
    if (!(step_size > 0.0)) throw std::invalid_argument("optimizer step size must be > 0");
    OptimizerState s;
    s.kind = kind;
    s.step_size = step_size;
    return s;
}

ThetaOptimizer::ThetaOptimizer(OptimizerKind kind, double step_size) {
    for (auto& g : groups) g = make_optimizer(kind, step_size);
}

void ThetaOptimizer::step(Theta& theta, const Theta& grad) {
    groups[0].step(theta.users.mu, grad.users.mu);
    groups[1].step(theta.users.sigma, grad.users.sigma);
    groups[2].step(theta.items.mu, grad.items.mu);
    groups[3].step(theta.items.sigma, grad.items.sigma);
}

}  // namespace pmlam
