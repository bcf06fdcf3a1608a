// SPDX-License-Identifier: Apache-2.0

#include "pmlam/config.h"

#include <charconv>
#include <fstream>
#include <sstream>

namespace pmlam {

namespace {

std::string normalize_key(std::string_view key) {
    std::string k(key);
    for (auto& c : k) {
        if (c == '-') c = '_';
    }
    return k;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

double to_double(std::string_view key, std::string_view v) {
    double out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw InputError("config '" + std::string(key) + "': '" + std::string(v) + "' is not a number");
    return out;
}

std::uint64_t to_u64(std::string_view key, std::string_view v) {
    std::uint64_t out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw InputError("config '" + std::string(key) + "': '" + std::string(v) + "' is not a non-negative integer");
    return out;
}

bool to_bool(std::string_view key, std::string_view v) {
    if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "0" || v == "no") return false;
    throw InputError("config '" + std::string(key) + "': '" + std::string(v) + "' is not on/off");
}

OptimizerKind to_optimizer(std::string_view key, std::string_view v) {
    if (v == "adam") return OptimizerKind::Adam;
    if (v == "sgd") return OptimizerKind::Sgd;
    throw InputError("config '" + std::string(key) + "': unknown optimizer '" + std::string(v) + "'");
}

std::string_view name(OptimizerKind k) { return k == OptimizerKind::Adam ? "adam" : "sgd"; }

// Shortest text that parses back to the same double.
std::string fmt_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

}  // namespace

MarginMode parse_margin_mode(std::string_view s) {
    if (s == "adaptive") return {true, 1.0};
    if (s == "fixed") return {false, 1.0};
    if (s.starts_with("fixed:")) {
        const double m = to_double("margin_mode", s.substr(6));
        if (!(m >= 0.0)) throw InputError("fixed margin must be >= 0");
        return {false, m};
    }
    throw InputError("unknown margin mode '" + std::string(s) + "' (expected adaptive | fixed | fixed:<m>)");
}

std::string to_string(const MarginMode& m) {
    return m.adaptive ? "adaptive" : "fixed:" + fmt_double(m.fixed_value);
}

bool RunConfig::any_adaptive() const {
    for (auto r : kAllRelations) {
        if (has(r) && margin_for(r).adaptive) return true;
    }
    return false;
}

std::vector<std::size_t> parse_size_list(std::string_view s) {
    std::vector<std::size_t> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        auto pos = s.find(',', start);
        if (pos == std::string_view::npos) pos = s.size();
        const auto item = trim(s.substr(start, pos - start));
        if (!item.empty()) out.push_back(static_cast<std::size_t>(to_u64("list", item)));
        start = pos + 1;
    }
    return out;
}

void apply_setting(RunConfig& cfg, std::string_view raw_key, std::string_view raw_value) {
    const auto key = normalize_key(trim(raw_key));
    const auto v = trim(raw_value);
    if (key == "h") cfg.h = to_u64(key, v);
    else if (key == "hidden") cfg.hidden = to_u64(key, v);
    else if (key == "alpha") cfg.alpha = to_double(key, v);
    else if (key == "phi_alpha") cfg.phi_alpha = to_double(key, v);
    else if (key == "lambda") cfg.lambda = to_double(key, v);
    else if (key == "epochs") cfg.epochs = to_u64(key, v);
    else if (key == "batch_size") cfg.batch_size = to_u64(key, v);
    else if (key == "neg_samples") cfg.neg_samples = to_u64(key, v);
    else if (key == "pool_size") cfg.pool_size = to_u64(key, v);
    else if (key == "refresh_period") cfg.refresh_period = to_u64(key, v);
    else if (key == "sim_threshold") cfg.sim_threshold = to_double(key, v);
    else if (key == "ks") cfg.ks = parse_size_list(v);
    else if (key == "seed") cfg.seed = to_u64(key, v);
    else if (key == "distance_kind" || key == "distance") cfg.distance_kind = parse_distance_kind(v);
    else if (key == "margin_mode") cfg.margin_mode = parse_margin_mode(v);
    else if (key == "pair_margin_mode") cfg.pair_margin_mode = parse_margin_mode(v);
    else if (key == "relations") {
        cfg.relations = {false, false, false};
        std::size_t start = 0;
        while (start <= v.size()) {
            auto pos = v.find(',', start);
            if (pos == std::string_view::npos) pos = v.size();
            const auto item = trim(v.substr(start, pos - start));
            if (!item.empty()) cfg.relations[relation_slot(parse_relation(item))] = true;
            start = pos + 1;
        }
    } else if (key == "indicator_mode") cfg.indicator_mode = parse_indicator_mode(v);
    else if (key == "eval_every") cfg.eval_every = to_u64(key, v);
    else if (key == "early_stop_patience") cfg.early_stop_patience = to_u64(key, v);
    else if (key == "mu_init_std") cfg.mu_init_std = to_double(key, v);
    else if (key == "sigma_init") cfg.sigma_init = to_double(key, v);
    else if (key == "eps_fd") cfg.eps_fd = to_double(key, v);
    else if (key == "theta_optimizer") cfg.theta_optimizer = to_optimizer(key, v);
    else if (key == "phi_optimizer") cfg.phi_optimizer = to_optimizer(key, v);
    else if (key == "margin_grad_to_theta") cfg.margin_grad_to_theta = to_bool(key, v);
    else if (key == "outer_batch") {
        if (v == "same") cfg.outer_batch = OuterBatch::Same;
        else if (v == "fresh") cfg.outer_batch = OuterBatch::Fresh;
        else throw InputError("outer_batch must be same | fresh");
    } else if (key == "optimization") {
        if (v == "bilevel") cfg.optimization = Optimization::Bilevel;
        else if (v == "joint") cfg.optimization = Optimization::Joint;
        else throw InputError("optimization must be bilevel | joint");
    } else if (key == "deterministic") cfg.deterministic = to_bool(key, v);
    else if (key == "rating_threshold") cfg.rating_threshold = to_double(key, v);
    else if (key == "min_user") cfg.min_user = to_u64(key, v);
    else if (key == "min_item") cfg.min_item = to_u64(key, v);
    else if (key == "fold") cfg.fold = to_u64(key, v);
    else throw InputError("unknown config key '" + key + "'");
}

void load_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config file '" + path.string() + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view body = line;
        if (const auto hash = body.find('#'); hash != std::string_view::npos) body = body.substr(0, hash);
        body = trim(body);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string_view::npos)
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
        apply_setting(cfg, body.substr(0, eq), body.substr(eq + 1));
    }
}

void validate(const RunConfig& cfg) {
    auto fail = [](const std::string& msg) { throw InputError("invalid config: " + msg); };
    if (cfg.h < 1) fail("h must be >= 1");
    if (!(cfg.alpha > 0.0)) fail("alpha must be > 0");
    if (cfg.phi_alpha < 0.0) fail("phi_alpha must be >= 0");
    if (cfg.lambda < 0.0) fail("lambda must be >= 0");
    if (cfg.batch_size < 1) fail("batch_size must be >= 1");
    if (cfg.neg_samples < 1) fail("neg_samples must be >= 1");
    if (cfg.pool_size < cfg.neg_samples) fail("pool_size must be >= neg_samples");
    if (cfg.refresh_period < 1) fail("refresh_period must be >= 1");
    if (!(cfg.sim_threshold > 0.0 && cfg.sim_threshold <= 1.0)) fail("sim_threshold must be in (0, 1]");
    if (cfg.ks.empty()) fail("ks must not be empty");
    for (auto k : cfg.ks) {
        if (k < 1) fail("every K must be >= 1");
    }
    if (!cfg.has(Relation::UserItem)) fail("relations must include ui");
    if (!(cfg.sigma_init > 0.0 && cfg.sigma_init <= 1.0)) fail("sigma_init must be in (0, 1]");
    if (!(cfg.mu_init_std >= 0.0)) fail("mu_init_std must be >= 0");
    if (!(cfg.eps_fd > 0.0)) fail("eps_fd must be > 0");
    if (cfg.min_user < 1 || cfg.min_item < 1) fail("min_user and min_item must be >= 1");
    if (cfg.fold >= 5) fail("fold must be in [0, 4]");
}

std::string to_text(const RunConfig& cfg) {
    std::ostringstream os;
    auto kv = [&os](std::string_view k, const std::string& v) { os << k << " = " << v << '\n'; };
    std::string ks, rels;
    for (auto k : cfg.ks) ks += (ks.empty() ? "" : ",") + std::to_string(k);
    for (auto r : kAllRelations) {
        if (cfg.has(r)) rels += (rels.empty() ? "" : ",") + std::string(to_string(r));
    }
    kv("h", std::to_string(cfg.h));
    kv("hidden", std::to_string(cfg.resolved_hidden()));
    kv("alpha", fmt_double(cfg.alpha));
    kv("phi_alpha", fmt_double(cfg.resolved_phi_alpha()));
    kv("lambda", fmt_double(cfg.lambda));
    kv("epochs", std::to_string(cfg.epochs));
    kv("batch_size", std::to_string(cfg.batch_size));
    kv("neg_samples", std::to_string(cfg.neg_samples));
    kv("pool_size", std::to_string(cfg.pool_size));
    kv("refresh_period", std::to_string(cfg.refresh_period));
    kv("sim_threshold", fmt_double(cfg.sim_threshold));
    kv("ks", ks);
    kv("seed", std::to_string(cfg.seed));
    kv("distance_kind", std::string(to_string(cfg.distance_kind)));
    kv("margin_mode", to_string(cfg.margin_mode));
    kv("pair_margin_mode", to_string(cfg.pair_margin_mode));
    kv("relations", rels);
    kv("indicator_mode", std::string(to_string(cfg.indicator_mode)));
    kv("eval_every", std::to_string(cfg.eval_every));
    kv("early_stop_patience", std::to_string(cfg.early_stop_patience));
    kv("mu_init_std", fmt_double(cfg.mu_init_std));
    kv("sigma_init", fmt_double(cfg.sigma_init));
    kv("eps_fd", fmt_double(cfg.eps_fd));
    kv("theta_optimizer", std::string(name(cfg.theta_optimizer)));
    kv("phi_optimizer", std::string(name(cfg.phi_optimizer)));
    kv("margin_grad_to_theta", cfg.margin_grad_to_theta ? "on" : "off");
    kv("outer_batch", cfg.outer_batch == OuterBatch::Same ? "same" : "fresh");
    kv("optimization", cfg.optimization == Optimization::Bilevel ? "bilevel" : "joint");
    kv("deterministic", cfg.deterministic ? "on" : "off");
    kv("rating_threshold", fmt_double(cfg.rating_threshold));
    kv("min_user", std::to_string(cfg.min_user));
    kv("min_item", std::to_string(cfg.min_item));
    kv("fold", std::to_string(cfg.fold));
    return os.str();
}

std::string config_header(const RunConfig& cfg) {
    std::istringstream in(to_text(cfg));
    std::string out, line;
    while (std::getline(in, line)) out += "# " + line + '\n';
    return out;
}

}  // namespace pmlam
