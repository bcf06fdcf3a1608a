// SPDX-License-Identifier: Apache-2.0
//
// Run configuration: every tunable with its default, the flat `key = value`
// file format, and validation.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pmlam/optimizer.h"
#include "pmlam/types.h"

namespace pmlam {

struct MarginMode {
    bool adaptive = true;
    double fixed_value = 1.0;  // used when !adaptive

    bool operator==(const MarginMode&) const = default;
};

MarginMode parse_margin_mode(std::string_view s);  // "adaptive" | "fixed" | "fixed:<m>"
std::string to_string(const MarginMode& m);

enum class OuterBatch : std::uint8_t { Same, Fresh };
enum class Optimization : std::uint8_t { Bilevel, Joint };

struct RunConfig {
    std::size_t h = 50;
    std::size_t hidden = 0;  // 0 means "same as h"
    double alpha = 0.001;
    double phi_alpha = 0.0;  // 0 means "same as alpha"
    double lambda = 0.001;
    std::size_t epochs = 100;
    std::size_t batch_size = 5000;
    std::size_t neg_samples = 2;
    std::size_t pool_size = 500;
    std::size_t refresh_period = 20;
    double sim_threshold = 0.2;
    std::vector<std::size_t> ks{5, 10, 15, 20};
    std::uint64_t seed = 1;
    DistanceKind distance_kind = DistanceKind::W2Squared;
    MarginMode margin_mode;       // U-I relation
    MarginMode pair_margin_mode;  // U-U and I-I relations
    std::array<bool, 3> relations{true, true, true};
    IndicatorMode indicator_mode = IndicatorMode::Gap;
    std::size_t eval_every = 0;  // 0 disables periodic evaluation
    std::size_t early_stop_patience = 0;
    double mu_init_std = 0.01;
    double sigma_init = 0.1;
    double eps_fd = 1e-2;
    OptimizerKind theta_optimizer = OptimizerKind::Adam;
    OptimizerKind phi_optimizer = OptimizerKind::Adam;
    bool margin_grad_to_theta = false;
    OuterBatch outer_batch = OuterBatch::Same;
    Optimization optimization = Optimization::Bilevel;
    bool deterministic = false;
    double rating_threshold = 4.0;
    std::size_t min_user = 10;
    std::size_t min_item = 5;
    std::size_t fold = 0;

    std::size_t resolved_hidden() const { return hidden == 0 ? h : hidden; }
    double resolved_phi_alpha() const { return phi_alpha > 0.0 ? phi_alpha : alpha; }
    bool has(Relation r) const { return relations[relation_slot(r)]; }
    const MarginMode& margin_for(Relation r) const {
        return r == Relation::UserItem ? margin_mode : pair_margin_mode;
    }
    bool any_adaptive() const;
};

/// Applies one `key = value` setting; keys accept '-' or '_'. Throws InputError
/// for unknown keys and unparsable values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

/// Reads a flat `key = value` file ('#' starts a comment).
void load_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// Range checks; throws InputError.
void validate(const RunConfig& cfg);

/// Canonical `key = value` lines for every key; load_config_file accepts it back.
std::string to_text(const RunConfig& cfg);

/// to_text with every line prefixed by "# ", for echoing into artifacts.
std::string config_header(const RunConfig& cfg);

std::vector<std::size_t> parse_size_list(std::string_view s);

}  // namespace pmlam
