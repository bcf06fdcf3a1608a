// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: one PASS/FAIL line per criterion, with the measured numbers
// indented underneath. The exit status is the number of failing criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdarg>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "oracles.h"
#include "pmlam/bilevel.h"
#include "pmlam/distance.h"
#include "pmlam/evaluator.h"
#include "pmlam/experiments.h"
#include "pmlam/model.h"
#include "pmlam/planted.h"
#include "pmlam/trainer.h"

using namespace pmlam;
namespace oc = pmlam::oracle;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    int id;
    bool pass;
};

std::vector<Outcome> g_outcomes;
std::vector<std::string> g_details;

void detail(const char* fmt, ...) __attribute__((format(printf, 1, 2)));
void detail(const char* fmt, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    g_details.emplace_back(buf);
}

// Details gathered while the criterion ran are printed under its verdict.
void report(int id, bool pass, const std::string& title) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", id, title.c_str());
    for (const auto& d : g_details) std::printf("    %s\n", d.c_str());
    std::fflush(stdout);
    g_details.clear();
    g_outcomes.push_back({id, pass});
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

/// Central differences at the listed coordinates only.
std::vector<double> partials(const std::function<double(std::span<const double>)>& f, std::vector<double> x,
                             const std::vector<std::size_t>& coords, double step) {
    std::vector<double> g;
    for (auto k : coords) {
        const double keep = x[k];
        x[k] = keep + step;
        const double up = f(x);
        x[k] = keep - step;
        const double down = f(x);
        x[k] = keep;
        g.push_back((up - down) / (2.0 * step));
    }
    return g;
}

// ---------------------------------------------------------------------------

void criterion_1() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(101);
    double max_trace = 0.0, max_quantile = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t h = 1 + t % 4;
        const auto ma = random_vec(h, rng, -1, 1), mb = random_vec(h, rng, -1, 1);
        const auto sa = random_vec(h, rng, 0.01, 1), sb = random_vec(h, rng, 0.01, 1);
        const double w = w2_squared(ma, sa, mb, sb);
        max_trace = std::max(max_trace, std::abs(w - oc::w2_trace_form(ma, sa, mb, sb)));
        max_quantile = std::max(max_quantile, std::abs(w - oc::w2_quantile_transport(ma, sa, mb, sb)));
    }
    const double secs = seconds_since(t0);
    detail("1000 pairs: max |closed - trace| = %.3e (< 1e-12), max |closed - quantile| = %.3e (< 1e-3), %.2f s (< 10 s)",
           max_trace, max_quantile, secs);
    report(1, max_trace < 1e-12 && max_quantile < 1e-3 && secs < 10.0, "W2 closed form vs trace form and quantile transport");
}
// ---------------------------------------------------------------------------

double distance_grad_error(std::size_t h, std::mt19937_64& rng) {
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        std::vector<double> x = random_vec(h, rng, -1, 1);
        const auto sa = random_vec(h, rng, 0.05, 1), mb = random_vec(h, rng, -1, 1), sb = random_vec(h, rng, 0.05, 1);
        x.insert(x.end(), sa.begin(), sa.end());
        x.insert(x.end(), mb.begin(), mb.end());
        x.insert(x.end(), sb.begin(), sb.end());
        const std::span<const double> xs(x);
        auto f = [h](std::span<const double> y) {
            return w2_squared(y.subspan(0, h), y.subspan(h, h), y.subspan(2 * h, h), y.subspan(3 * h, h));
        };
        std::vector<double> g(4 * h, 0.0);
        std::span<double> gs(g);
        w2_squared_grad(xs.subspan(0, h), xs.subspan(h, h), xs.subspan(2 * h, h), xs.subspan(3 * h, h),
                        {gs.subspan(0, h), gs.subspan(h, h), gs.subspan(2 * h, h), gs.subspan(3 * h, h)});
        worst = std::max(worst, oc::relative_error(g, oc::numeric_gradient(f, x, 1e-6)));

        auto fe = [h](std::span<const double> y) { return euclidean_squared(y.subspan(0, h), y.subspan(h, h)); };
        std::vector<double> ge(2 * h, 0.0);
        std::span<double> ges(ge);
        euclidean_squared_grad(xs.subspan(0, h), xs.subspan(h, h), ges.subspan(0, h), ges.subspan(h, h));
        std::vector<double> xe(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(2 * h));
        worst = std::max(worst, oc::relative_error(ge, oc::numeric_gradient(fe, xe, 1e-6)));
    }
    return worst;
}

double margin_net_grad_error(std::size_t h, std::mt19937_64& rng) {
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto mode = static_cast<IndicatorMode>(t % 3);
        const auto dim = indicator_dim(mode, h);
        auto p = init_margin_net(dim, h, rng);
        for (auto& b : p.b1()) b = random_vec(1, rng, -0.5, 0.5)[0];
        p.b2() = random_vec(1, rng, -1, 1)[0];
        const auto x0 = random_vec(3 * h, rng, -0.4, 0.4);
        const std::span<const double> xs(x0);
        std::vector<double> s(dim);
        build_indicator(mode, xs.subspan(0, h), xs.subspan(h, h), xs.subspan(2 * h, h), s);
        MarginCache c;
        forward(p, s, c);
        std::vector<double> gp(p.values.size(), 0.0), gs(dim, 0.0), gx(3 * h, 0.0);
        backward(p, s, c, 1.0, gp, gs);
        std::span<double> g(gx);
        indicator_backward(mode, xs.subspan(0, h), xs.subspan(h, h), xs.subspan(2 * h, h), gs, g.subspan(0, h),
                           g.subspan(h, h), g.subspan(2 * h, h));
        auto f_phi = [&](std::span<const double> v) {
            MarginNetParams q = p;
            q.values.assign(v.begin(), v.end());
            MarginCache cc;
            return forward(q, s, cc);
        };
        auto f_x = [&](std::span<const double> v) {
            std::vector<double> ss(dim);
            build_indicator(mode, v.subspan(0, h), v.subspan(h, h), v.subspan(2 * h, h), ss);
            MarginCache cc;
            return forward(p, ss, cc);
        };
        worst = std::max(worst, oc::relative_error(gp, oc::numeric_gradient(f_phi, p.values, 1e-5)));
        worst = std::max(worst, oc::relative_error(gx, oc::numeric_gradient(f_x, x0, 1e-5)));
    }
    return worst;
}

struct LossCheck {
    double worst = 0.0;
    std::size_t phi_coords = 0;
};

LossCheck loss_grad_error(std::size_t h, std::mt19937_64& rng) {
    LossCheck out;
    int checked = 0;
    while (checked < 100) {
        const Theta theta{oc::random_table(3, h, rng, 0.1, 1.0), oc::random_table(4, h, rng, 0.1, 1.0)};
        const Relation r = kAllRelations[static_cast<std::size_t>(checked) % 3];
        const Index na = r == Relation::ItemItem ? 4 : 3, nt = r == Relation::UserUser ? 3 : 4;
        std::uniform_int_distribution<Index> pa(0, na - 1), pt(0, nt - 1);
        TripletBatch b;
        b.relation = r;
        for (int k = 0; k < 6; ++k) {
            b.anchors.push_back(pa(rng));
            b.positives.push_back(pt(rng));
            b.negatives.push_back(pt(rng));
        }
        std::normal_distribution<double> z(0.0, 1.0);
        b.noise.resize(b.size() * 3 * h);
        for (auto& e : b.noise) e = z(rng);
        const auto kind = checked % 2 == 0 ? DistanceKind::W2Squared : DistanceKind::EuclideanSquared;
        const auto mode = static_cast<IndicatorMode>(checked % 3);
        auto net = init_margin_net(indicator_dim(mode, h), h, rng);
        net.b2() = 0.3;
        const RelationMargin margin{&net, 1.0, mode};

        // Skip draws with a hinge on its kink, where differences are meaningless.
        const auto ms = batch_margins(b, theta, margin, kind);
        bool near_kink = false;
        for (std::size_t k = 0; k < b.size(); ++k) {
            const double arg = relation_distance(theta, r, b.anchors[k], b.positives[k], kind) -
                               relation_distance(theta, r, b.anchors[k], b.negatives[k], kind) + ms[k];
            near_kink |= std::abs(arg) < 1e-3;
        }
        if (near_kink) continue;

        Theta gd = zeros_like(theta), gm = zeros_like(theta);
        std::vector<double> gphi(net.values.size(), 0.0);
        batch_inner(b, theta, margin, kind, {&gd, &gm, gphi});
        axpy(gd, 1.0, gm);
        auto f_theta = [&](std::span<const double> x) {
            return batch_inner(b, oc::unflatten(x, theta), margin, kind).inner_value;
        };
        out.worst = std::max(out.worst, oc::relative_error(oc::flatten(gd), oc::numeric_gradient(f_theta, oc::flatten(theta), 1e-6)));

        // At h = 50 the network has ~7600 parameters; a random subset of 300 is
        // differenced per instance, every parameter at the smaller sizes.
        std::vector<std::size_t> coords(net.values.size());
        std::iota(coords.begin(), coords.end(), 0u);
        if (coords.size() > 300) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(300);
        }
        out.phi_coords = coords.size();
        auto f_phi = [&](std::span<const double> x) {
            MarginNetParams q = net;
            q.values.assign(x.begin(), x.end());
            return batch_inner(b, theta, RelationMargin{&q, 1.0, mode}, kind).inner_value;
        };
        std::vector<double> analytic;
        for (auto k : coords) analytic.push_back(gphi[k]);
        out.worst = std::max(out.worst, oc::relative_error(analytic, partials(f_phi, net.values, coords, 1e-6)));

        // Outer loss at unit margin.
        Theta go = zeros_like(theta);
        batch_outer(b, theta, kind, &go);
        auto f_outer = [&](std::span<const double> x) {
            return batch_outer(b, oc::unflatten(x, theta), kind).outer_value;
        };
        const auto num_outer = oc::numeric_gradient(f_outer, oc::flatten(theta), 1e-6);
        if (std::any_of(num_outer.begin(), num_outer.end(), [](double v) { return v != 0.0; }))
            out.worst = std::max(out.worst, oc::relative_error(oc::flatten(go), num_outer));
        ++checked;
    }
    return out;
}

void criterion_2() {
    const auto t0 = Clock::now();
    std::mt19937_64 rng(202);
    bool ok = true;
    for (std::size_t h : {2u, 8u, 50u}) {
        const double d = distance_grad_error(h, rng);
        const double m = margin_net_grad_error(h, rng);
        const auto l = loss_grad_error(h, rng);
        ok &= d < 1e-5 && m < 1e-5 && l.worst < 1e-5;
        detail("h=%zu: max relative error distance %.2e, margin net %.2e, losses %.2e (phi coordinates per instance %zu)",
               h, d, m, l.worst, l.phi_coords);
    }
    const double secs = seconds_since(t0);
    ok &= secs < 60.0;
    detail("100 instances per kernel and size, threshold 1e-5, %.1f s (< 60 s)", secs);
    report(2, ok, "analytic gradients vs central differences");
}

// ---------------------------------------------------------------------------

void criterion_3() {
    const auto t0 = Clock::now();
    const double alpha = 0.1, theta = 1.0, phi = 0.0;
    const double proxy = theta - alpha * 2.0 * (theta - phi);
    const double v = 2.0 * proxy;
    const double scalar = central_difference_hypergradient(alpha, 1e-2, std::abs(v), 1, [&](double step) {
        return std::vector<double>{-2.0 * (theta + step * v - phi)};
    })[0];

    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        std::mt19937_64 rng(seed);
        const std::size_t h = 3;
        Theta th{oc::random_table(2, h, rng, 0.2, 0.8), oc::random_table(3, h, rng, 0.2, 0.8)};
        for (auto& x : th.users.mu) x *= 0.5;
        for (auto& x : th.items.mu) x *= 0.5;
        BatchSet batches;
        auto mk = [&](Relation r, std::vector<Index> a, std::vector<Index> p, std::vector<Index> n) {
            TripletBatch b;
            b.relation = r;
            b.anchors = std::move(a);
            b.positives = std::move(p);
            b.negatives = std::move(n);
            std::normal_distribution<double> z(0.0, 1.0);
            b.noise.resize(b.size() * 3 * h);
            for (auto& e : b.noise) e = z(rng);
            return b;
        };
        batches[0] = mk(Relation::UserItem, {0, 0, 1, 1}, {0, 1, 2, 1}, {2, 2, 0, 0});
        batches[1] = mk(Relation::UserUser, {0, 1}, {1, 0}, {0, 1});
        batches[2] = mk(Relation::ItemItem, {0, 1, 2}, {1, 0, 1}, {2, 2, 0});
        MarginSet margins;
        margins.adaptive = {true, true, true};
        for (auto& net : margins.nets) {
            net = init_margin_net(3 * h, h, rng);
            net.b2() = 0.5;
        }
        BilevelSettings s;
        s.alpha = 0.1;
        s.eps_fd = 1e-4;
        const auto hg = phi_hypergradient(th, build_proxy(th, batches, margins, s), batches, margins, s);
        for (std::size_t slot = 0; slot < 3; ++slot) {
            auto f = [&](std::span<const double> x) {
                MarginSet m = margins;
                m.nets[slot].values.assign(x.begin(), x.end());
                const Theta px = build_proxy(th, batches, m, s);
                double total = 0.0;
                for (const auto& b : batches) total += batch_outer(b, px, s.kind).outer_value;
                return total;
            };
            worst = std::max(worst, oc::relative_error(hg.phi[slot], oc::numeric_gradient(f, margins.nets[slot].values, 1e-6)));
        }
    }
    const double secs = seconds_since(t0);
    const bool ok = std::abs(scalar - 0.32) < 1e-4 && worst < 1e-2 && secs < 30.0;
    detail("scalar engine %.8f (exact 0.32, tolerance 1e-4)", scalar);
    detail("2-user/3-item toy, 5 seeds x 3 relations: max relative error %.3e (< 1e-2), %.2f s (< 30 s)", worst, secs);
    report(3, ok, "hypergradient: scalar engine and full-model finite differences on phi");
}
// ---------------------------------------------------------------------------

struct PlantedRun {
    InteractionDataset ds;
    PlantedData data;
    FoldSplit fold;
};

PlantedRun planted(std::uint64_t seed) {
    PlantedRun p;
    PlantedSpec spec;
    spec.seed = seed;
    p.data = make_planted(spec);
    p.ds = planted_dataset(p.data);
    p.fold = split_five_fold(p.ds, seed)[0];
    return p;
}

struct Trained {
    ModelState state;
    TrainResult result;
    double seconds = 0.0;
};

Trained train_on(const PlantedRun& p, const RunConfig& cfg) {
    const auto t0 = Clock::now();
    Trained t;
    t.state = init_model(cfg, p.ds.n_users, p.ds.n_items);
    const auto [un, in] = fold_neighbors(cfg, p.fold, p.ds.n_items);
    t.result = train(cfg, t.state, p.fold, p.ds.n_items, un, in);
    t.seconds = seconds_since(t0);
    return t;
}

void criterion_4() {
    bool ok = true;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto p = planted(seed);
        RunConfig cfg;
        cfg.seed = seed;
        cfg.epochs = 200;
        cfg.optimization = Optimization::Joint;
        const double joint = train_on(p, cfg).result.trace.back().mean_margin;
        cfg.optimization = Optimization::Bilevel;
        const double bilevel = train_on(p, cfg).result.trace.back().mean_margin;
        ok &= joint < 0.05 && bilevel > 0.2;
        detail("seed %llu: mean generated margin joint %.4f (< 0.05), bilevel %.4f (> 0.2)",
               static_cast<unsigned long long>(seed), joint, bilevel);
    }
    report(4, ok, "joint training collapses the margin, bilevel training does not");
}

// ---------------------------------------------------------------------------

void criterion_5() {
    std::mt19937_64 rng(505);
    const std::vector<std::size_t> ks{1, 5, 10, 20};
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        FoldSplit f;
        f.train.resize(10);
        f.test.resize(10);
        std::uniform_int_distribution<int> which(0, 4);
        for (std::size_t u = 0; u < 10; ++u) {
            for (Index i = 0; i < 40; ++i) {
                const int w = which(rng);
                if (w == 0) f.train[u].push_back(i);
                else if (w == 1) f.test[u].push_back(i);
            }
        }
        const Theta th{oc::random_table(10, 6, rng), oc::random_table(40, 6, rng)};
        const auto kind = trial % 2 ? DistanceKind::W2Squared : DistanceKind::EuclideanSquared;
        const auto rep = evaluate(th, f, ks, kind);
        const auto brute = oc::score_brute(th, f.train, f.test, ks, kind == DistanceKind::EuclideanSquared);
        for (std::size_t s = 0; s < ks.size(); ++s) {
            worst = std::max({worst, std::abs(rep.recall[s] - brute.recall[s]), std::abs(rep.ndcg[s] - brute.ndcg[s])});
        }
    }

    // Random embeddings rank each user's unobserved items in uniformly random
    // order, so a test item lands in the top 10 with probability 10 / (n - |S_i|).
    const std::size_t n_users = 300, n_items = 400;
    std::mt19937_64 data_rng(506);
    FoldSplit f;
    f.train.resize(n_users);
    f.test.resize(n_users);
    std::bernoulli_distribution in_train(0.05), in_test(0.03);
    for (std::size_t u = 0; u < n_users; ++u) {
        for (Index i = 0; i < n_items; ++i) {
            if (in_train(data_rng)) f.train[u].push_back(i);
            else if (in_test(data_rng)) f.test[u].push_back(i);
        }
    }
    double expected = 0.0;
    std::size_t evaluated = 0;
    for (std::size_t u = 0; u < n_users; ++u) {
        if (f.test[u].empty()) continue;
        expected += 10.0 / static_cast<double>(n_items - f.train[u].size());
        ++evaluated;
    }
    expected /= static_cast<double>(evaluated);
    std::vector<double> per_seed;
    const std::vector<std::size_t> k10{10};
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Theta th{init_table(n_users, 50, seed * 2, 0.01, 0.1), init_table(n_items, 50, seed * 2 + 1, 0.01, 0.1)};
        per_seed.push_back(evaluate(th, f, k10, DistanceKind::W2Squared).recall[0]);
    }
    const double mean = std::accumulate(per_seed.begin(), per_seed.end(), 0.0) / 5.0;
    double ss = 0.0;
    for (double x : per_seed) ss += (x - mean) * (x - mean);
    const double se = std::sqrt(ss / 4.0 / 5.0);
    const bool ok = worst == 0.0 && std::abs(mean - expected) <= 3.0 * se;
    detail("50 ten-user toys: max |evaluator - brute force| = %.1e (exact match required)", worst);
    detail("random embeddings, %zu users x %zu items, 5 seeds: mean R@10 %.5f, expected %.5f (10/n = %.5f), "
           "3 SE = %.5f",
           n_users, n_items, mean, expected, 10.0 / n_items, 3.0 * se);
    report(5, ok, "metric oracles: brute-force scorer and random-embedding expectation");
}
// ---------------------------------------------------------------------------

std::vector<std::pair<PlantedRun, Trained>> criterion_6() {
    std::vector<std::pair<PlantedRun, Trained>> runs;
    bool ok = true;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto p = planted(seed);
        RunConfig cfg;
        cfg.seed = seed;
        cfg.epochs = 300;
        auto t = train_on(p, cfg);
        const std::vector<std::size_t> k5{5};
        const double r5 = evaluate(t.state.theta, p.fold, k5, cfg.distance_kind).recall[0];
        ok &= r5 >= 0.9 && t.seconds < 120.0;
        detail("seed %llu: R@5 %.4f (>= 0.9) after 300 epochs in %.1f s (< 120 s)",
               static_cast<unsigned long long>(seed), r5, t.seconds);
        runs.emplace_back(std::move(p), std::move(t));
    }
    report(6, ok, "planted clusters, full model");
    return runs;
}

// ---------------------------------------------------------------------------

void criterion_8(const std::vector<std::pair<PlantedRun, Trained>>& runs) {
    bool ok = true;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto& [p, t] = runs[k];
        const auto labels = planted_item_labels(p.data, p.ds);
        const auto rows = case_study(t.state, p.ds, p.fold, labels, p.ds.n_users, 3, k + 1);
        const auto s = summarize(rows);
        std::vector<double> dis, sim;
        std::size_t ordered = 0;
        for (const auto& r : rows) {
            dis.push_back(r.margin_dissimilar);
            sim.push_back(r.margin_similar);
            ordered += r.margin_similar < r.margin_dissimilar ? 1 : 0;
        }
        const auto tt = paired_t_test(dis, sim);
        ok &= s.rows > 0 && s.mean_similar < s.mean_dissimilar;
        detail("seed %zu (full model, 300 epochs): %zu tuples, mean margin same-cluster %.9f, cross-cluster %.9f",
               k + 1, s.rows, s.mean_similar, s.mean_dissimilar);
        detail("  gap %.3e (%.1e of the margin), %zu/%zu tuples ordered, paired t = %.2f, p = %.2e",
               s.mean_dissimilar - s.mean_similar, (s.mean_dissimilar - s.mean_similar) / s.mean_dissimilar, ordered,
               s.rows, tt.t, tt.p_two_sided);
    }
    report(8, ok, "same-cluster negatives get smaller margins than cross-cluster ones");
}

// ---------------------------------------------------------------------------

void criterion_9() {
    const auto p = planted(9);
    RunConfig cfg;
    cfg.seed = 9;
    cfg.epochs = 20;
    cfg.eval_every = 5;
    cfg.deterministic = true;
    const auto a = train_on(p, cfg);
    const auto b = train_on(p, cfg);
    bool same_evals = a.result.evals.size() == b.result.evals.size();
    for (std::size_t k = 0; same_evals && k < a.result.evals.size(); ++k)
        same_evals = a.result.evals[k].first == b.result.evals[k].first && a.result.evals[k].second == b.result.evals[k].second;
    const bool same_trace = a.result.trace == b.result.trace;
    const bool same_state = a.state == b.state;
    detail("20 epochs twice: loss traces %s, %zu eval reports %s, final state %s",
           same_trace ? "bit-identical" : "DIFFER", a.result.evals.size(), same_evals ? "bit-identical" : "DIFFER",
           same_state ? "bit-identical" : "DIFFERS");
    report(9, same_trace && same_evals && same_state, "determinism under a fixed seed");
}
}  // namespace

int main() {
    const auto t0 = Clock::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    const auto runs = criterion_6();
    std::printf("[SKIP] criterion 7: run by the acceptance_ml100k test (needs PMLAM_ML100K)\n");
    criterion_8(runs);
    criterion_9();

    const auto failing = std::count_if(g_outcomes.begin(), g_outcomes.end(), [](const Outcome& o) { return !o.pass; });
    std::printf("%zu criteria run, %d failed, %.0f s total\n", g_outcomes.size(), static_cast<int>(failing),
                seconds_since(t0));
    return static_cast<int>(failing);
}
