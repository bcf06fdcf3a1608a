// SPDX-License-Identifier: Apache-2.0

#include "oracles.h"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <unistd.h>

namespace pmlam::oracle {

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

double w2_trace_form(std::span<const double> mu_a, std::span<const double> sigma_a, std::span<const double> mu_b,
                     std::span<const double> sigma_b) {
    const auto h = static_cast<Eigen::Index>(mu_a.size());
    Eigen::VectorXd ma(h), mb(h);
    Eigen::MatrixXd sa = Eigen::MatrixXd::Zero(h, h), sb = Eigen::MatrixXd::Zero(h, h);
    for (Eigen::Index d = 0; d < h; ++d) {
        ma(d) = mu_a[d];
        mb(d) = mu_b[d];
        sa(d, d) = sigma_a[d];
        sb(d, d) = sigma_b[d];
    }
    const Eigen::MatrixXd ra = psd_sqrt(sa);
    const Eigen::MatrixXd cross = psd_sqrt(ra * sb * ra);
    return (ma - mb).squaredNorm() + (sa + sb - 2.0 * cross).trace();
}

double w2_quantile_transport(std::span<const double> mu_a, std::span<const double> sigma_a,
                             std::span<const double> mu_b, std::span<const double> sigma_b) {
    boost::math::quadrature::tanh_sinh<double> integrator;
    double total = 0.0;
    for (std::size_t d = 0; d < mu_a.size(); ++d) {
        const boost::math::normal na(mu_a[d], std::sqrt(sigma_a[d]));
        const boost::math::normal nb(mu_b[d], std::sqrt(sigma_b[d]));
        auto f = [&](double t) {
            if (t <= 0.0 || t >= 1.0) return 0.0;
            const double diff = boost::math::quantile(na, t) - boost::math::quantile(nb, t);
            return diff * diff;
        };
        total += integrator.integrate(f, 0.0, 1.0);
    }
    return total;
}

std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f, std::vector<double> x,
                                     double step) {
    std::vector<double> g(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double keep = x[k];
        x[k] = keep + step;
        const double up = f(x);
        x[k] = keep - step;
        const double down = f(x);
        x[k] = keep;
        g[k] = (up - down) / (2.0 * step);
    }
    return g;
}

double relative_error(std::span<const double> a, std::span<const double> b, double floor) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        diff += (a[k] - b[k]) * (a[k] - b[k]);
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

std::vector<ImplicitPair> filter_pairs(const std::vector<ImplicitPair>& pairs, std::size_t min_user,
                                       std::size_t min_item) {
    std::vector<ImplicitPair> cur;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& p : pairs) {
        if (seen.insert({p.user, p.item}).second) cur.push_back(p);
    }
    while (true) {
        std::map<std::string, std::size_t> ucount, icount;
        for (const auto& p : cur) {
            ++ucount[p.user];
            ++icount[p.item];
        }
        std::vector<ImplicitPair> next;
        for (const auto& p : cur) {
            if (ucount[p.user] >= min_user && icount[p.item] >= min_item) next.push_back(p);
        }
        if (next.size() == cur.size()) return next;
        cur = std::move(next);
    }
}

std::vector<std::vector<Index>> neighbors_brute(const std::vector<std::vector<Index>>& rows, double threshold) {
    std::vector<std::vector<Index>> out(rows.size());
    for (std::size_t a = 0; a < rows.size(); ++a) {
        for (std::size_t b = 0; b < rows.size(); ++b) {
            if (a == b || rows[a].empty() || rows[b].empty()) continue;
            std::set<Index> sa(rows[a].begin(), rows[a].end());
            std::size_t common = 0;
            for (auto x : rows[b]) common += sa.count(x);
            const double sim = static_cast<double>(common) /
                               std::sqrt(static_cast<double>(rows[a].size() * rows[b].size()));
            if (sim >= threshold) out[a].push_back(static_cast<Index>(b));
        }
    }
    return out;
}

BruteMetrics score_brute(const Theta& theta, const std::vector<std::vector<Index>>& train,
                         const std::vector<std::vector<Index>>& test, const std::vector<std::size_t>& ks,
                         bool euclidean) {
    BruteMetrics m;
    m.recall.assign(ks.size(), 0.0);
    m.ndcg.assign(ks.size(), 0.0);
    const auto h = theta.users.dim;
    for (std::size_t u = 0; u < train.size(); ++u) {
        if (test[u].empty()) continue;
        ++m.n_users;
        std::set<Index> tr(train[u].begin(), train[u].end()), te(test[u].begin(), test[u].end());
        std::vector<std::pair<double, Index>> all;
        for (std::size_t j = 0; j < theta.items.rows; ++j) {
            if (tr.count(static_cast<Index>(j))) continue;
            double d = 0.0;
            for (std::size_t k = 0; k < h; ++k) {
                const double dm = theta.users.mu[u * h + k] - theta.items.mu[j * h + k];
                d += dm * dm;
                if (!euclidean) {
                    const double ds = std::sqrt(theta.users.sigma[u * h + k]) - std::sqrt(theta.items.sigma[j * h + k]);
                    d += ds * ds;
                }
            }
            all.emplace_back(d, static_cast<Index>(j));
        }
        std::sort(all.begin(), all.end());
        for (std::size_t s = 0; s < ks.size(); ++s) {
            double hits = 0.0, dcg = 0.0, idcg = 0.0;
            for (std::size_t p = 0; p < ks[s] && p < all.size(); ++p) {
                if (te.count(all[p].second)) {
                    hits += 1.0;
                    dcg += 1.0 / std::log2(static_cast<double>(p + 2));
                }
            }
            for (std::size_t p = 0; p < std::min(ks[s], te.size()); ++p) idcg += 1.0 / std::log2(static_cast<double>(p + 2));
            m.recall[s] += hits / static_cast<double>(te.size());
            m.ndcg[s] += dcg / idcg;
        }
    }
    for (std::size_t s = 0; s < ks.size(); ++s) {
        m.recall[s] /= static_cast<double>(m.n_users);
        m.ndcg[s] /= static_cast<double>(m.n_users);
    }
    return m;
}

GaussianEmbeddingTable random_table(std::size_t n, std::size_t h, std::mt19937_64& rng, double sigma_lo,
                                    double sigma_hi) {
    GaussianEmbeddingTable t(n, h);
    std::uniform_real_distribution<double> mu(-1.0, 1.0), sg(sigma_lo, sigma_hi);
    const double scale = 1.0 / std::sqrt(static_cast<double>(h));
    for (auto& x : t.mu) x = mu(rng) * scale;
    for (auto& x : t.sigma) x = sg(rng);
    return t;
}

std::vector<double> flatten(const Theta& t) {
    std::vector<double> x;
    for (const auto* v : {&t.users.mu, &t.users.sigma, &t.items.mu, &t.items.sigma}) x.insert(x.end(), v->begin(), v->end());
    return x;
}

Theta unflatten(std::span<const double> x, const Theta& shape) {
    Theta t = shape;
    std::size_t off = 0;
    for (auto* v : {&t.users.mu, &t.users.sigma, &t.items.mu, &t.items.sigma}) {
        std::copy(x.begin() + static_cast<std::ptrdiff_t>(off), x.begin() + static_cast<std::ptrdiff_t>(off + v->size()),
                  v->begin());
        off += v->size();
    }
    return t;
}

std::string temp_dir(const std::string& tag) {
    static std::size_t counter = 0;
    auto dir = std::filesystem::temp_directory_path() /
               ("pmlam_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

}  // namespace pmlam::oracle
