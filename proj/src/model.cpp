// SPDX-License-Identifier: Apache-2.0

#include "pmlam/model.h"

namespace pmlam {

namespace {

std::uint64_t stream_seed(std::uint64_t seed, std::uint32_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), stream};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace

ModelState init_model(const RunConfig& cfg, std::size_t n_users, std::size_t n_items) {
    validate(cfg);
    ModelState s;
    s.theta.users = init_table(n_users, cfg.h, stream_seed(cfg.seed, 1), cfg.mu_init_std, cfg.sigma_init);
    s.theta.items = init_table(n_items, cfg.h, stream_seed(cfg.seed, 2), cfg.mu_init_std, cfg.sigma_init);

    std::mt19937_64 net_rng(stream_seed(cfg.seed, 3));
    s.margins.mode = cfg.indicator_mode;
    for (auto r : kAllRelations) {
        const auto slot = relation_slot(r);
        const auto& mm = cfg.margin_for(r);
        s.margins.fixed[slot] = mm.fixed_value;
        s.margins.adaptive[slot] = cfg.has(r) && mm.adaptive;
        if (s.margins.adaptive[slot])
            s.margins.nets[slot] = init_margin_net(indicator_dim(cfg.indicator_mode, cfg.h), cfg.resolved_hidden(), net_rng);
    }

    s.theta_opt = ThetaOptimizer(cfg.theta_optimizer, cfg.alpha);
    for (auto& o : s.phi_opts) o = make_optimizer(cfg.phi_optimizer, cfg.resolved_phi_alpha());
    s.rng.seed(stream_seed(cfg.seed, 4));
    return s;
}

BilevelSettings bilevel_settings(const RunConfig& cfg) {
    BilevelSettings b;
    b.alpha = cfg.alpha;
    b.lambda = cfg.lambda;
    b.eps_fd = cfg.eps_fd;
    b.kind = cfg.distance_kind;
    b.margin_grad_to_theta = cfg.margin_grad_to_theta;
    return b;
}

}  // namespace pmlam
