// SPDX-License-Identifier: Apache-2.0

#include "pmlam/evaluator.h"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "pmlam/distance.h"
#include "pmlam/io.h"

namespace pmlam {

namespace {

std::size_t k_slot(const std::vector<std::size_t>& ks, std::size_t k) {
    const auto it = std::find(ks.begin(), ks.end(), k);
    if (it == ks.end()) throw std::invalid_argument("K=" + std::to_string(k) + " was not evaluated");
    return static_cast<std::size_t>(it - ks.begin());
}

bool rank_less(const RankedItem& a, const RankedItem& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.item < b.item);
}

std::vector<RankedItem> rank_with_roots(const Theta& theta, const std::vector<double>& user_sqrt,
                                        const std::vector<double>& item_sqrt, Index user,
                                        std::span<const Index> train, DistanceKind kind, std::size_t top_k) {
    const auto h = theta.users.dim;
    const auto& items = theta.items;
    std::vector<RankedItem> out;
    out.reserve(items.rows);
    std::size_t t = 0;
    const auto mu_u = theta.users.mu_row(user);
    for (std::size_t j = 0; j < items.rows; ++j) {
        while (t < train.size() && train[t] < j) ++t;
        if (t < train.size() && train[t] == j) continue;
        double d;
        if (kind == DistanceKind::EuclideanSquared) {
            d = euclidean_squared(mu_u, items.mu_row(j));
        } else {
            d = w2_squared_sqrt(mu_u, {user_sqrt.data() + user * h, h}, items.mu_row(j),
                                {item_sqrt.data() + j * h, h});
        }
        out.push_back({static_cast<Index>(j), d});
    }
    if (top_k > 0 && top_k < out.size()) {
        std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(top_k), out.end(), rank_less);
        out.resize(top_k);
    } else {
        std::sort(out.begin(), out.end(), rank_less);
    }
    return out;
}

std::vector<double> roots(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return std::sqrt(x); });
    return out;
}

}  // namespace

std::vector<RankedItem> rank_items(const Theta& theta, Index user, std::span<const Index> train, DistanceKind kind,
                                   std::size_t top_k) {
    if (user >= theta.users.rows) throw std::invalid_argument("rank_items: user out of range");
    std::vector<double> us, is;
    if (kind == DistanceKind::W2Squared) {
        us = roots(theta.users.sigma);
        is = roots(theta.items.sigma);
    }
    return rank_with_roots(theta, us, is, user, train, kind, top_k);
}

double recall_at_k(std::span<const Index> ranked, std::span<const Index> test, std::size_t k) {
    if (test.empty()) throw std::invalid_argument("recall_at_k: empty test set");
    const auto n = std::min(k, ranked.size());
    std::size_t hits = 0;
    for (std::size_t p = 0; p < n; ++p) hits += std::binary_search(test.begin(), test.end(), ranked[p]) ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(test.size());
}

double ndcg_at_k(std::span<const Index> ranked, std::span<const Index> test, std::size_t k) {
    if (test.empty()) throw std::invalid_argument("ndcg_at_k: empty test set");
    const auto n = std::min(k, ranked.size());
    double dcg = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
        if (std::binary_search(test.begin(), test.end(), ranked[p])) dcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    }
    double idcg = 0.0;
    for (std::size_t p = 0; p < std::min(k, test.size()); ++p) idcg += 1.0 / std::log2(static_cast<double>(p) + 2.0);
    return dcg / idcg;
}

double EvalReport::recall_at(std::size_t k) const { return recall[k_slot(ks, k)]; }
double EvalReport::ndcg_at(std::size_t k) const { return ndcg[k_slot(ks, k)]; }

EvalReport evaluate(const Theta& theta, const FoldSplit& fold, std::span<const std::size_t> ks, DistanceKind kind) {
    if (ks.empty()) throw std::invalid_argument("evaluate: no K values");
    if (fold.train.size() != theta.users.rows) throw std::invalid_argument("evaluate: fold does not match the model");
    EvalReport rep;
    rep.fold = fold.fold_index;
    rep.ks.assign(ks.begin(), ks.end());
    rep.recall.assign(ks.size(), 0.0);
    rep.ndcg.assign(ks.size(), 0.0);
    rep.user_recall.resize(ks.size());
    rep.user_ndcg.resize(ks.size());
    const auto max_k = *std::max_element(ks.begin(), ks.end());

    std::vector<double> us, is;
    if (kind == DistanceKind::W2Squared) {
        us = roots(theta.users.sigma);
        is = roots(theta.items.sigma);
    }
    std::vector<Index> top;
    for (std::size_t u = 0; u < fold.train.size(); ++u) {
        const auto& test = fold.test[u];
        if (test.empty()) continue;
        const auto ranked = rank_with_roots(theta, us, is, static_cast<Index>(u), fold.train[u], kind, max_k);
        top.clear();
        for (const auto& r : ranked) top.push_back(r.item);
        for (std::size_t s = 0; s < ks.size(); ++s) {
            rep.user_recall[s].push_back(recall_at_k(top, test, ks[s]));
            rep.user_ndcg[s].push_back(ndcg_at_k(top, test, ks[s]));
        }
        ++rep.n_users;
    }
    for (std::size_t s = 0; s < ks.size() && rep.n_users > 0; ++s) {
        double r = 0.0, n = 0.0;
        for (double x : rep.user_recall[s]) r += x;
        for (double x : rep.user_ndcg[s]) n += x;
        rep.recall[s] = r / static_cast<double>(rep.n_users);
        rep.ndcg[s] = n / static_cast<double>(rep.n_users);
    }
    return rep;
}

EvalReport cross_fold_mean(std::span<const EvalReport> folds) {
    if (folds.empty()) throw std::invalid_argument("cross_fold_mean: no folds");
    EvalReport out;
    out.fold = kAllFolds;
    out.ks = folds.front().ks;
    out.recall.assign(out.ks.size(), 0.0);
    out.ndcg.assign(out.ks.size(), 0.0);
    for (const auto& f : folds) {
        if (f.ks != out.ks) throw std::invalid_argument("cross_fold_mean: folds evaluated at different K");
        for (std::size_t s = 0; s < out.ks.size(); ++s) {
            out.recall[s] += f.recall[s];
            out.ndcg[s] += f.ndcg[s];
        }
        out.n_users += f.n_users;
    }
    const auto n = static_cast<double>(folds.size());
    for (std::size_t s = 0; s < out.ks.size(); ++s) {
        out.recall[s] /= n;
        out.ndcg[s] /= n;
    }
    return out;
}

void write_eval_csv(const std::filesystem::path& path, std::span<const EvalReport> reports, const std::string& header) {
    io::atomic_write(path, [&](std::ostream& out) {
        out << header;
        out << "fold,K,recall,ndcg,n_users\n";
        out << std::setprecision(17);
        for (const auto& r : reports) {
            for (std::size_t s = 0; s < r.ks.size(); ++s) {
                if (r.fold == kAllFolds) out << "mean";
                else out << r.fold;
                out << ',' << r.ks[s] << ',' << r.recall[s] << ',' << r.ndcg[s] << ',' << r.n_users << '\n';
            }
        }
    });
}

std::string format_eval_table(std::span<const EvalReport> reports) {
    std::ostringstream os;
    os << std::left << std::setw(6) << "fold" << std::setw(6) << "K" << std::setw(10) << "recall" << std::setw(10)
       << "ndcg" << "users\n";
    os << std::fixed << std::setprecision(4);
    for (const auto& r : reports) {
        for (std::size_t s = 0; s < r.ks.size(); ++s) {
            os << std::setw(6) << (r.fold == kAllFolds ? std::string("mean") : std::to_string(r.fold))
               << std::setw(6) << r.ks[s] << std::setw(10) << r.recall[s] << std::setw(10) << r.ndcg[s]
               << r.n_users << '\n';
        }
    }
    return os.str();
}

PairedTTest paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("paired_t_test: need two equal samples of n >= 2");
    PairedTTest out;
    out.n = a.size();
    const auto n = static_cast<double>(a.size());
    double mean = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) mean += a[k] - b[k];
    mean /= n;
    double ss = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) ss += (a[k] - b[k] - mean) * (a[k] - b[k] - mean);
    out.mean_difference = mean;
    const double se = std::sqrt(ss / (n - 1.0) / n);
    if (se == 0.0) {
        out.t = mean == 0.0 ? 0.0 : std::copysign(INFINITY, mean);
        out.p_two_sided = mean == 0.0 ? 1.0 : 0.0;
        return out;
    }
    out.t = mean / se;
    boost::math::students_t dist(n - 1.0);
    out.p_two_sided = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(out.t)));
    return out;
}

}  // namespace pmlam
