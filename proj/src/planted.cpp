// SPDX-License-Identifier: Apache-2.0

#include "pmlam/planted.h"

#include <algorithm>
#include <fstream>
#include <random>
#include <stdexcept>

#include "pmlam/io.h"

namespace pmlam {

PlantedData make_planted(const PlantedSpec& spec) {
    if (spec.n_clusters < 1 || spec.n_users < spec.n_clusters || spec.n_items < spec.n_clusters)
        throw std::invalid_argument("planted: need at least one user and item per cluster");
    PlantedData out;
    out.user_cluster.resize(spec.n_users);
    out.item_cluster.resize(spec.n_items);
    for (std::size_t u = 0; u < spec.n_users; ++u) out.user_cluster[u] = u * spec.n_clusters / spec.n_users;
    for (std::size_t i = 0; i < spec.n_items; ++i) out.item_cluster[i] = i * spec.n_clusters / spec.n_items;

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (std::size_t u = 0; u < spec.n_users; ++u) {
        std::vector<bool> hit(spec.n_items, false);
        std::vector<std::size_t> own;
        for (std::size_t i = 0; i < spec.n_items; ++i) {
            const bool same = out.item_cluster[i] == out.user_cluster[u];
            if (same) own.push_back(i);
            hit[i] = coin(rng) < (same ? spec.p_in : spec.p_out);
        }
        std::shuffle(own.begin(), own.end(), rng);
        std::size_t count = 0;
        for (bool h : hit) count += h ? 1 : 0;
        for (auto i : own) {
            if (count >= spec.min_per_user) break;
            if (!hit[i]) {
                hit[i] = true;
                ++count;
            }
        }
        for (std::size_t i = 0; i < spec.n_items; ++i) {
            if (hit[i]) out.pairs.push_back({"u" + std::to_string(u), "i" + std::to_string(i)});
        }
    }
    return out;
}

InteractionDataset planted_dataset(const PlantedData& data) { return filter_iterative(data.pairs, 1, 1); }

std::vector<std::string> planted_item_labels(const PlantedData& data, const InteractionDataset& ds) {
    std::vector<std::string> labels(ds.n_items);
    for (std::size_t j = 0; j < ds.n_items; ++j) {
        const auto k = std::stoul(ds.item_ids[j].substr(1));
        labels[j] = "c" + std::to_string(data.item_cluster.at(k));
    }
    return labels;
}

void write_planted(const std::filesystem::path& dir, const PlantedData& data) {
    std::filesystem::create_directories(dir);
    io::atomic_write(dir / "ratings.tsv", [&](std::ostream& out) {
        for (const auto& p : data.pairs) out << p.user << '\t' << p.item << "\t5\n";
    });
    io::atomic_write(dir / "item_labels.tsv", [&](std::ostream& out) {
        for (std::size_t i = 0; i < data.item_cluster.size(); ++i) out << 'i' << i << "\tc" << data.item_cluster[i] << '\n';
    });
}

std::vector<std::string> load_item_labels(const std::filesystem::path& path, const InteractionDataset& ds) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open label file '" + path.string() + "'");
    std::vector<std::string> labels(ds.n_items);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected item<TAB>label");
        if (auto idx = ds.item_index(line.substr(0, tab))) labels[*idx] = line.substr(tab + 1);
    }
    return labels;
}

}  // namespace pmlam
