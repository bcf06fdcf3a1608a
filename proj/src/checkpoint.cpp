// SPDX-License-Identifier: Apache-2.0

#include "pmlam/checkpoint.h"

#include <fstream>
#include <sstream>

#include "pmlam/io.h"

namespace pmlam {

namespace {

constexpr std::string_view kMagic = "PMLAM-CKPT v1";

void write_table(std::ostream& out, const GaussianEmbeddingTable& t) {
    io::write_u64(out, t.rows);
    io::write_u64(out, t.dim);
    io::write_f64s(out, t.mu);
    io::write_f64s(out, t.sigma);
}

GaussianEmbeddingTable read_table(std::istream& in) {
    GaussianEmbeddingTable t;
    t.rows = io::read_u64(in);
    t.dim = io::read_u64(in);
    t.mu = io::read_f64s(in);
    t.sigma = io::read_f64s(in);
    if (t.mu.size() != t.rows * t.dim || t.sigma.size() != t.rows * t.dim)
        throw InputError("checkpoint: embedding table has inconsistent shape");
    return t;
}

void write_opt(std::ostream& out, const OptimizerState& o) {
    io::write_u64(out, o.kind == OptimizerKind::Adam ? 1 : 0);
    io::write_f64(out, o.step_size);
    io::write_f64(out, o.beta1);
    io::write_f64(out, o.beta2);
    io::write_f64(out, o.epsilon);
    io::write_u64(out, o.t);
    io::write_f64s(out, o.m);
    io::write_f64s(out, o.v);
}

OptimizerState read_opt(std::istream& in) {
    OptimizerState o;
    o.kind = io::read_u64(in) == 1 ? OptimizerKind::Adam : OptimizerKind::Sgd;
    o.step_size = io::read_f64(in);
    o.beta1 = io::read_f64(in);
    o.beta2 = io::read_f64(in);
    o.epsilon = io::read_f64(in);
    o.t = io::read_u64(in);
    o.m = io::read_f64s(in);
    o.v = io::read_f64s(in);
    return o;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    const auto& s = ckpt.state;
    io::atomic_write(path, [&](std::ostream& out) {
        io::write_magic(out, kMagic);
        io::write_string(out, ckpt.config_text);
        io::write_u64(out, ckpt.fold);
        io::write_u64(out, ckpt.dataset_hash);
        io::write_u64(out, s.epochs_done);
        write_table(out, s.theta.users);
        write_table(out, s.theta.items);
        io::write_u64(out, static_cast<std::uint64_t>(s.margins.mode));
        for (std::size_t slot = 0; slot < 3; ++slot) {
            const auto& net = s.margins.nets[slot];
            io::write_u64(out, s.margins.adaptive[slot] ? 1 : 0);
            io::write_f64(out, s.margins.fixed[slot]);
            io::write_u64(out, net.input_dim);
            io::write_u64(out, net.hidden);
            io::write_f64s(out, net.values);
        }
        for (const auto& g : s.theta_opt.groups) write_opt(out, g);
        for (const auto& g : s.phi_opts) write_opt(out, g);
        std::ostringstream rng;
        rng << s.rng;
        io::write_string(out, rng.str());
    });
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open checkpoint '" + path.string() + "'");
    io::expect_magic(in, kMagic, path.string());
    Checkpoint c;
    auto& s = c.state;
    c.config_text = io::read_string(in);
    c.fold = io::read_u64(in);
    c.dataset_hash = io::read_u64(in);
    s.epochs_done = io::read_u64(in);
    s.theta.users = read_table(in);
    s.theta.items = read_table(in);
    const auto mode = io::read_u64(in);
    if (mode > 2) throw InputError("checkpoint: unknown indicator mode");
    s.margins.mode = static_cast<IndicatorMode>(mode);
    for (std::size_t slot = 0; slot < 3; ++slot) {
        auto& net = s.margins.nets[slot];
        s.margins.adaptive[slot] = io::read_u64(in) == 1;
        s.margins.fixed[slot] = io::read_f64(in);
        net.input_dim = io::read_u64(in);
        net.hidden = io::read_u64(in);
        net.values = io::read_f64s(in);
        if (s.margins.adaptive[slot] && net.values.size() != net.hidden * net.input_dim + 2 * net.hidden + 1)
            throw InputError("checkpoint: margin network has inconsistent shape");
    }
    for (auto& g : s.theta_opt.groups) g = read_opt(in);
    for (auto& g : s.phi_opts) g = read_opt(in);
    std::istringstream rng(io::read_string(in));
    rng >> s.rng;
    if (!rng) throw InputError("checkpoint: bad RNG state");
    return c;
}

}  // namespace pmlam
